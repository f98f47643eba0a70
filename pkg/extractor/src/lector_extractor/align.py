"""Subword-to-word attention correction.

A transformer tokenizer splits words into subwords; the attention matrices it
produces are subword-by-subword. To get word-level matrices: on the key side
the attention going *to* a word is the sum over its subwords, and on the
query side the attention coming *from* a word is the average over its
subwords. Summing preserves each row's total exactly and averaging keeps it,
so row-stochastic inputs stay row-stochastic.
"""

from __future__ import annotations

import numpy as np


def merge_subword_attention(attention: np.ndarray, alignment: list[int]) -> np.ndarray:
    """Collapse a subword attention matrix onto words.

    ``alignment[i]`` is the word index of subword ``i``; every subword must
    map to exactly one word, and word indices must cover 0..W-1.
    """
    att = np.asarray(attention, dtype=np.float64)
    if att.ndim != 2 or att.shape[0] != att.shape[1]:
        raise ValueError(f"attention must be square, got {att.shape}")
    n_sub = att.shape[0]
    if len(alignment) != n_sub:
        raise ValueError(
            f"alignment covers {len(alignment)} subwords, attention has {n_sub}"
        )
    if n_sub == 0:
        return np.zeros((0, 0))
    alignment = list(alignment)
    for i, w in enumerate(alignment):
        if not isinstance(w, (int, np.integer)) or w < 0:
            raise ValueError(f"subword {i} is unaligned (word index {w!r})")
    n_words = max(alignment) + 1
    seen = set(alignment)
    missing = [w for w in range(n_words) if w not in seen]
    if missing:
        raise ValueError(f"words {missing} have no subwords")

    group = np.zeros((n_sub, n_words))
    group[np.arange(n_sub), alignment] = 1.0
    counts = group.sum(axis=0)
    # keys: sum subword columns per word; queries: average subword rows
    return (group.T @ (att @ group)) / counts[:, None]
