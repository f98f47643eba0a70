"""Run a pretrained masked LM over a deck and export tensor bundles.

Each slide is processed independently so embeddings are specific to their
slide's context. Words are tokenized one at a time to keep an exact
subword-to-word alignment; special tokens are stripped from the attention
matrix (rows renormalized to restore stochasticity) before the subword
correction collapses it onto words. Word embeddings are the mean of the
word's subword vectors from the final hidden layer; attention is averaged
uniformly over every head of every layer. Both rules are recorded in the
manifest sidecar next to the bundle.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .align import merge_subword_attention
from .binfmt import bundle_path, write_bundle
from .deckio import DeckText, read_deck

logger = logging.getLogger(__name__)

ATTENTION_AGGREGATION = "uniform mean over all heads of all layers"
EMBEDDING_RULE = "final hidden layer, mean over a word's subwords"


@dataclass(frozen=True)
class ExtractionConfig:
    checkpoint: str
    attention_aggregation: str = ATTENTION_AGGREGATION
    embedding_rule: str = EMBEDDING_RULE
    max_seq_len: int = 512
    device: str = "cpu"

    def __post_init__(self):
        if self.attention_aggregation != ATTENTION_AGGREGATION:
            raise ValueError(
                f"unsupported attention aggregation {self.attention_aggregation!r}; "
                f"only {ATTENTION_AGGREGATION!r} is implemented"
            )
        if self.embedding_rule != EMBEDDING_RULE:
            raise ValueError(
                f"unsupported embedding rule {self.embedding_rule!r}; "
                f"only {EMBEDDING_RULE!r} is implemented"
            )


@dataclass
class _Loaded:
    tokenizer: object
    model: object
    dim: int


def _load(config: ExtractionConfig) -> _Loaded:
    import torch
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(config.checkpoint)
    # eager attention keeps per-head matrices available
    model = AutoModel.from_pretrained(config.checkpoint, attn_implementation="eager")
    model.eval()
    model.to(config.device)
    return _Loaded(tokenizer=tokenizer, model=model, dim=int(model.config.hidden_size))


def _tokenize_words(tokenizer, words: list[str]) -> list[list[int]]:
    """Per-word subword ids; empty tokenizations fall back to [UNK]."""
    out = []
    unk = tokenizer.unk_token_id
    for w in words:
        ids = tokenizer(w, add_special_tokens=False)["input_ids"]
        out.append(list(ids) if ids else [unk])
    return out


def _slide_tensors(loaded: _Loaded, title: list[str], body: list[str],
                   max_seq_len: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Word embeddings and word-level attention for one slide.

    Returns (embeddings, attention, dropped_body_words). Body words are
    truncated from the end when the subword sequence would not fit.
    """
    import torch

    words = list(title) + list(body)
    if not words:
        raise ValueError("slide has no words")
    pieces = _tokenize_words(loaded.tokenizer, words)
    budget = max_seq_len - 2  # [CLS] and [SEP]
    kept = len(words)
    while kept > len(title) and sum(len(p) for p in pieces[:kept]) > budget:
        kept -= 1
    if sum(len(p) for p in pieces[:kept]) > budget:
        raise ValueError(
            f"slide title alone exceeds max_seq_len={max_seq_len}"
        )
    dropped = len(words) - kept
    pieces = pieces[:kept]

    alignment: list[int] = []
    flat: list[int] = []
    for w_idx, ids in enumerate(pieces):
        flat.extend(ids)
        alignment.extend([w_idx] * len(ids))

    cls_id = loaded.tokenizer.cls_token_id
    sep_id = loaded.tokenizer.sep_token_id
    input_ids = torch.tensor([[cls_id, *flat, sep_id]], device=loaded.model.device)
    with torch.no_grad():
        outputs = loaded.model(input_ids=input_ids, output_attentions=True)

    hidden = outputs.last_hidden_state[0].cpu().numpy().astype(np.float64)
    attn = torch.stack(outputs.attentions).mean(dim=(0, 2))[0].cpu().numpy().astype(np.float64)

    # strip [CLS]/[SEP] and renormalize rows over the remaining mass
    n = len(flat)
    sub_hidden = hidden[1 : n + 1]
    sub_attn = attn[1 : n + 1, 1 : n + 1]
    row_mass = sub_attn.sum(axis=1, keepdims=True)
    if np.any(row_mass <= 0):
        raise ValueError("attention mass vanished after removing special tokens")
    sub_attn = sub_attn / row_mass

    word_attn = merge_subword_attention(sub_attn, alignment)
    group = np.zeros((n, kept))
    group[np.arange(n), alignment] = 1.0
    counts = group.sum(axis=0)
    word_emb = (group.T @ sub_hidden) / counts[:, None]
    return word_emb, word_attn, dropped


def export_bundle(deck_file: str | Path, config: ExtractionConfig,
                  out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``<deck_id>.tensors.bin`` plus its manifest sidecar.

    The output is deterministic for a fixed checkpoint: the model runs in
    eval mode with gradients disabled.
    """
    deck = read_deck(deck_file)
    loaded = _load(config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    slides = []
    truncations = []
    for idx, (title, body) in enumerate(deck.slides):
        emb, attn, dropped = _slide_tensors(loaded, title, body, config.max_seq_len)
        if dropped:
            logger.warning("slide %d: dropped %d trailing body word(s)", idx, dropped)
            truncations.append({"slide": idx, "dropped_body_words": dropped})
        slides.append((emb, attn))

    bin_path = write_bundle(deck.deck_id, loaded.dim, slides, bundle_path(out_dir, deck.deck_id))
    manifest = {
        "deck_id": deck.deck_id,
        "checkpoint": config.checkpoint,
        "dim": loaded.dim,
        "attention_aggregation": config.attention_aggregation,
        "embedding_rule": config.embedding_rule,
        "special_tokens": "stripped; attention rows renormalized",
        "max_seq_len": config.max_seq_len,
        "truncations": truncations,
    }
    manifest_path = out_dir / f"{deck.deck_id}.tensors.manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
    return bin_path, manifest_path
