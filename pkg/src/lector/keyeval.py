"""Keyphrase ranking and evaluation against gold keyphrases.

Topics are ranked by their column sums over the matrix; precision, recall
and F1 are reported as percentages. Matching is exact word-sequence
equality; ties in the ranking break lexicographically by topic words.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scoring import SlideTopicMatrix

logger = logging.getLogger(__name__)

DEFAULT_N_LIST = (5, 10, 15)
MEAN_RANGE_MAX = 100


@dataclass(frozen=True)
class GoldKeyphrases:
    phrases: frozenset[tuple[str, ...]]

    def __len__(self) -> int:
        return len(self.phrases)


def load_gold(path: str | Path) -> GoldKeyphrases:
    """Read one keyphrase per line, tokens space-separated, deduplicated."""
    phrases = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            words = tuple(line.split())
            if words:
                phrases.add(words)
    if not phrases:
        raise ValueError(f"{path}: no gold keyphrases found")
    return GoldKeyphrases(frozenset(phrases))


def save_gold(gold: GoldKeyphrases, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for words in sorted(gold.phrases):
            fh.write(" ".join(words) + "\n")
    return path


def keyphrase_scores(matrix: SlideTopicMatrix) -> np.ndarray:
    """Per-topic keyphrase score: the column sum of M over all slides."""
    return np.asarray(matrix.M, dtype=np.float64).sum(axis=0)


def ranked_topics(mt: np.ndarray, topic_words: list[tuple[str, ...]]) -> list[int]:
    """All topic indices by descending score, ties lexicographic by words."""
    return sorted(range(len(mt)), key=lambda j: (-mt[j], topic_words[j]))


def topn(mt: np.ndarray, topic_words: list[tuple[str, ...]], n: int) -> list[int]:
    """Indices of the n best-scoring topics (all of them if n exceeds count)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    order = ranked_topics(mt, topic_words)
    if n > len(order):
        logger.warning("requested top %d of only %d topics; returning all", n, len(order))
        return order
    return order[:n]


def prf(predicted: set[tuple[str, ...]], gold: GoldKeyphrases) -> tuple[float, float, float]:
    """Precision, recall, F1 in percent; F1 is the harmonic mean of P and R."""
    if not gold.phrases:
        raise ValueError("gold keyphrase set is empty")
    tp = len(set(predicted) & gold.phrases)
    p = 100.0 * tp / len(predicted) if predicted else 0.0
    r = 100.0 * tp / len(gold.phrases)
    f1 = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


@dataclass
class EvalReport:
    model: str
    per_n: list[tuple[int, float, float, float]]  # (n, P, R, F1)
    best: tuple[int, float, float, float]
    mean: tuple[float, float, float]
    mean_range: tuple[int, int]
    truncated: bool  # mean range clipped at the topic count


def evaluate_at_n(matrix: SlideTopicMatrix, gold: GoldKeyphrases,
                  n_list: tuple[int, ...] = DEFAULT_N_LIST,
                  mean_max: int = MEAN_RANGE_MAX) -> EvalReport:
    """P/R/F1 at each requested n, plus best-F1 and mean rows over n = 1..mean_max.

    When the candidate set is smaller than mean_max the range is truncated at
    the topic count and the report flags it.
    """
    mt = keyphrase_scores(matrix)
    words = matrix.topic_words
    order = ranked_topics(mt, words)
    n_topics = len(order)
    if n_topics == 0:
        raise ValueError("matrix has no topics to evaluate")

    upper = min(mean_max, n_topics)
    truncated = upper < mean_max
    if truncated:
        logger.warning("only %d topics; mean/best computed over n = 1..%d", n_topics, upper)

    def at(n: int) -> tuple[float, float, float]:
        return prf({words[j] for j in order[:n]}, gold)

    per_n = [(n, *at(n)) for n in n_list]

    best = None
    sums = np.zeros(3)
    for n in range(1, upper + 1):
        p, r, f1 = at(n)
        sums += (p, r, f1)
        if best is None or f1 > best[3]:
            best = (n, p, r, f1)
    mean = tuple(sums / upper)
    return EvalReport(
        model=matrix.model,
        per_n=per_n,
        best=best,
        mean=mean,
        mean_range=(1, upper),
        truncated=truncated,
    )


def topk_per_slide(matrix: SlideTopicMatrix, k: int = 5) -> list[list[int]]:
    """Top-k topic indices for each slide row, same tie rule as the ranking."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    words = matrix.topic_words
    return [topn(np.asarray(row, dtype=np.float64), words, min(k, len(words)))
            for row in matrix.M]


def report_to_dict(report: EvalReport) -> dict:
    return {
        "model": report.model,
        "per_n": [
            {"n": n, "precision": p, "recall": r, "f1": f}
            for n, p, r, f in report.per_n
        ],
        "best": {
            "n": report.best[0],
            "precision": report.best[1],
            "recall": report.best[2],
            "f1": report.best[3],
        },
        "mean": {
            "precision": report.mean[0],
            "recall": report.mean[1],
            "f1": report.mean[2],
        },
        "mean_range": list(report.mean_range),
        "truncated": report.truncated,
    }


def save_report(report: EvalReport, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")
    return path


def format_report(report: EvalReport) -> str:
    """Human-readable table with per-n, Best and Mean rows."""
    lines = [
        f"model: {report.model}",
        f"{'n':>6}  {'P':>7}  {'R':>7}  {'F1':>7}",
    ]
    for n, p, r, f in report.per_n:
        lines.append(f"{n:>6}  {p:7.2f}  {r:7.2f}  {f:7.2f}")
    bn, bp, br, bf = report.best
    lines.append(f"Best@{bn:<2} {bp:7.2f}  {br:7.2f}  {bf:7.2f}")
    mp, mr, mf = report.mean
    lo, hi = report.mean_range
    lines.append(f"{'Mean':>6}  {mp:7.2f}  {mr:7.2f}  {mf:7.2f}   (n = {lo}..{hi})")
    return "\n".join(lines)
