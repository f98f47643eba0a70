"""Per-deck tensor bundles: word embeddings and word-level attention matrices.

Binary layout of ``<deck_id>.tensors.bin`` (all little-endian):

    magic   4 bytes  b"LCTB"
    version u32      1
    deck_id u32 length + UTF-8 bytes
    num_slides u32
    dim     u32
    per slide:
        n_w u32
        embeddings  n_w * dim float32, row-major (title rows first)
        attention   n_w * n_w float32, row-major (row = query word)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"LCTB"
VERSION = 1
ROW_SUM_TOL = 1e-3


class BundleFormatError(ValueError):
    """Raised when a tensor-bundle file cannot be decoded."""


@dataclass(frozen=True)
class SlideTensors:
    embeddings: np.ndarray  # (n_w, dim) float32
    attention: np.ndarray   # (n_w, n_w) float32

    @property
    def n_words(self) -> int:
        return int(self.embeddings.shape[0])


@dataclass(frozen=True)
class TensorBundle:
    deck_id: str
    dim: int
    per_slide: tuple[SlideTensors, ...]


@dataclass(frozen=True)
class Violation:
    kind: str  # slide_count | word_count | row_sum | negative_attention | non_finite
    slide_index: int | None
    row_index: int | None
    value: float | None
    message: str

    def __str__(self) -> str:
        return self.message


class _Reader:
    def __init__(self, data: bytes, name: str):
        self.data = data
        self.name = name
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise BundleFormatError(
                f"{self.name}: truncated payload, needed {n} bytes at byte offset {self.offset} "
                f"(file has {len(self.data)})"
            )
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32_array(self, count: int, shape: tuple[int, ...]) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4", count=count).reshape(shape)


def read_tensor_bundle(path: str | Path) -> TensorBundle:
    """Read and decode a tensor-bundle file."""
    path = Path(path)
    r = _Reader(path.read_bytes(), path.name)
    magic = r.take(4)
    if magic != MAGIC:
        raise BundleFormatError(f"{path.name}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32()
    if version != VERSION:
        raise BundleFormatError(f"{path.name}: unsupported version {version}, expected {VERSION}")
    deck_id = r.take(r.u32()).decode("utf-8")
    num_slides = r.u32()
    dim = r.u32()
    if dim == 0:
        raise BundleFormatError(f"{path.name}: dim must be positive")
    slides = []
    for _ in range(num_slides):
        n_w = r.u32()
        emb = r.f32_array(n_w * dim, (n_w, dim))
        att = r.f32_array(n_w * n_w, (n_w, n_w))
        slides.append(SlideTensors(embeddings=emb, attention=att))
    if r.offset != len(r.data):
        raise BundleFormatError(
            f"{path.name}: {len(r.data) - r.offset} trailing bytes after payload at byte offset {r.offset}"
        )
    return TensorBundle(deck_id=deck_id, dim=dim, per_slide=tuple(slides))


def write_tensor_bundle(bundle: TensorBundle, path: str | Path) -> Path:
    """Write a bundle in the binary format read by :func:`read_tensor_bundle`."""
    path = Path(path)
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    deck_bytes = bundle.deck_id.encode("utf-8")
    out += struct.pack("<I", len(deck_bytes)) + deck_bytes
    out += struct.pack("<I", len(bundle.per_slide))
    out += struct.pack("<I", bundle.dim)
    for st in bundle.per_slide:
        n_w = st.n_words
        emb = np.ascontiguousarray(st.embeddings, dtype="<f4")
        att = np.ascontiguousarray(st.attention, dtype="<f4")
        if emb.shape != (n_w, bundle.dim) or att.shape != (n_w, n_w):
            raise ValueError(f"inconsistent tensor shapes for deck {bundle.deck_id!r}")
        out += struct.pack("<I", n_w)
        out += emb.tobytes()
        out += att.tobytes()
    path.write_bytes(bytes(out))
    return path


def bundle_path(directory: str | Path, deck_id: str) -> Path:
    return Path(directory) / f"{deck_id}.tensors.bin"


def validate_bundle(bundle: TensorBundle, deck) -> list[Violation]:
    """Check a bundle against its deck; returns all violations (empty = valid).

    Violations are data, not exceptions: any finite, well-shaped bundle is
    inspected in full, and every problem found is reported.
    """
    report: list[Violation] = []
    if len(bundle.per_slide) != len(deck.slides):
        report.append(
            Violation(
                kind="slide_count",
                slide_index=None,
                row_index=None,
                value=float(len(bundle.per_slide)),
                message=(
                    f"deck {deck.deck_id!r}: bundle has {len(bundle.per_slide)} slides, "
                    f"deck has {len(deck.slides)}"
                ),
            )
        )
    for i, (st, slide) in enumerate(zip(bundle.per_slide, deck.slides)):
        if st.n_words != slide.n_words:
            report.append(
                Violation(
                    kind="word_count",
                    slide_index=i,
                    row_index=None,
                    value=float(st.n_words),
                    message=(
                        f"slide {i}: bundle carries {st.n_words} words, "
                        f"deck slide has {slide.n_words} tokens"
                    ),
                )
            )
        emb = np.asarray(st.embeddings, dtype=np.float64)
        att = np.asarray(st.attention, dtype=np.float64)
        if not np.all(np.isfinite(emb)):
            report.append(
                Violation(
                    kind="non_finite",
                    slide_index=i,
                    row_index=None,
                    value=None,
                    message=f"slide {i}: non-finite embedding values",
                )
            )
        if not np.all(np.isfinite(att)):
            report.append(
                Violation(
                    kind="non_finite",
                    slide_index=i,
                    row_index=None,
                    value=None,
                    message=f"slide {i}: non-finite attention values",
                )
            )
            continue  # row sums are meaningless on non-finite data
        for r in range(att.shape[0]):
            row = att[r]
            if np.any(row < 0):
                report.append(
                    Violation(
                        kind="negative_attention",
                        slide_index=i,
                        row_index=r,
                        value=float(row.min()),
                        message=f"slide {i}: attention row {r} has negative entries (min {row.min():g})",
                    )
                )
            s = float(row.sum())
            if att.shape[1] > 0 and abs(s - 1.0) > ROW_SUM_TOL:
                report.append(
                    Violation(
                        kind="row_sum",
                        slide_index=i,
                        row_index=r,
                        value=s,
                        message=f"slide {i}: attention row {r} sums to {s:.6g}, expected 1 +/- {ROW_SUM_TOL}",
                    )
                )
    return report
