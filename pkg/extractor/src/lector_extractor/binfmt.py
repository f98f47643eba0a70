"""Writer for the tensor-bundle binary interchange format.

Little-endian layout: magic ``LCTB``; version u32 = 1; deck_id as u32 length
plus UTF-8 bytes; num_slides u32; dim u32; then per slide: n_w u32,
embeddings (n_w * dim float32 row-major), attention (n_w * n_w float32
row-major, query rows).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"LCTB"
VERSION = 1


def write_bundle(deck_id: str, dim: int,
                 slides: list[tuple[np.ndarray, np.ndarray]],
                 path: str | Path) -> Path:
    """slides: one (embeddings, attention) pair per slide, title rows first."""
    path = Path(path)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    raw_id = deck_id.encode("utf-8")
    out += struct.pack("<I", len(raw_id)) + raw_id
    out += struct.pack("<I", len(slides))
    out += struct.pack("<I", dim)
    for emb, att in slides:
        emb = np.ascontiguousarray(emb, dtype="<f4")
        att = np.ascontiguousarray(att, dtype="<f4")
        n_w = emb.shape[0]
        if emb.shape != (n_w, dim) or att.shape != (n_w, n_w):
            raise ValueError(
                f"inconsistent shapes: embeddings {emb.shape}, attention {att.shape}"
            )
        out += struct.pack("<I", n_w)
        out += emb.tobytes()
        out += att.tobytes()
    path.write_bytes(bytes(out))
    return path


def bundle_path(directory: str | Path, deck_id: str) -> Path:
    return Path(directory) / f"{deck_id}.tensors.bin"
