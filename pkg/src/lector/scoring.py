"""Slide-topic scoring: importance, similarity, and the fused matrix M.

The importance score accumulates the attention a topic's words receive from
the other words of a slide and corrects it with a smooth-inverse-frequency
factor k/(k + f). The similarity score is the mean cosine between the
contextualized slide embedding and the topic's instance embeddings, softened
by the instance count to the alpha power. M is the d-weighted combination of
the two after global min-max normalization.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, SlideDeck, TopicSet, extract_topic_candidates
from .discourse import (
    default_phi,
    slide_embedding,
    slide_weights,
    topic_instance_embeddings,
)
from .tensors import TensorBundle

logger = logging.getLogger(__name__)

MODEL_LECTOR = "LECTOR"
MODEL_TFIDF = "TFIDF"
MODEL_BINARY = "BINARY"
MODEL_TEXTRANK = "TEXTRANK"
MODEL_ATTENTION_LITE = "ATTENTION_LITE"
MODELS = frozenset(
    {MODEL_LECTOR, MODEL_TFIDF, MODEL_BINARY, MODEL_TEXTRANK, MODEL_ATTENTION_LITE}
)

DEFAULT_K = 1e-3
DEFAULT_ALPHA = 0.25
DEFAULT_D = 0.5


@dataclass
class SlideTopicMatrix:
    """Dense slides x topics matrix with model provenance."""

    model: str
    params: dict
    deck_ids: list[str]
    deck_slide_counts: list[int]
    topic_words: list[tuple[str, ...]]
    M: np.ndarray  # (slide_count, topic_count)

    @property
    def slide_count(self) -> int:
        return int(self.M.shape[0])

    @property
    def topic_count(self) -> int:
        return int(self.M.shape[1])

    def deck_row_offset(self, deck_id: str) -> int:
        offset = 0
        for did, count in zip(self.deck_ids, self.deck_slide_counts):
            if did == deck_id:
                return offset
            offset += count
        raise KeyError(f"deck {deck_id!r} not in matrix")


@dataclass
class ScoreComponents:
    ss: np.ndarray  # importance
    cs: np.ndarray  # similarity


def corpus_layout(corpus: Corpus) -> tuple[list[str], list[int], dict[tuple[str, int], int]]:
    """Deck ids, per-deck slide counts, and (deck_id, slide_index) -> row map."""
    deck_ids = [d.deck_id for d in corpus]
    counts = [len(d.slides) for d in corpus]
    rows: dict[tuple[str, int], int] = {}
    offset = 0
    for deck in corpus:
        for slide in deck.slides:
            rows[(deck.deck_id, slide.index)] = offset + slide.index
        offset += len(deck.slides)
    return deck_ids, counts, rows


def accumulated_attention(deck: SlideDeck, bundle: TensorBundle,
                          topics: TopicSet) -> np.ndarray:
    """Raw attention each topic's words receive on each slide of one deck.

    Every occurrence contributes the column sum of the attention matrix at
    its position(s), excluding the diagonal (self) entry; bigram occurrences
    contribute both constituent columns.
    """
    n_slides = len(deck.slides)
    a = np.zeros((n_slides, len(topics)))
    received = []
    for st in bundle.per_slide:
        att = np.asarray(st.attention, dtype=np.float64)
        received.append(att.sum(axis=0) - np.diag(att))
    for j, topic in enumerate(topics):
        span = len(topic.words)
        for occ in topic.occurrences:
            if occ.deck_id != deck.deck_id:
                continue
            r = received[occ.slide_index]
            a[occ.slide_index, j] += float(r[occ.start : occ.start + span].sum())
    return a


def importance_scores(deck: SlideDeck, bundle: TensorBundle, topics: TopicSet,
                      k: float = DEFAULT_K) -> np.ndarray:
    """SIF-corrected accumulated attention for one deck's slides.

    f is the topic's relative corpus frequency (occurrences over all
    candidate occurrences); entries are zero wherever the topic does not
    occur on the slide.
    """
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    a = accumulated_attention(deck, bundle, topics)
    freq = np.array([topics.relative_frequency(t) for t in topics]) if len(topics) else np.zeros(0)
    sif = k / (k + freq)
    return a * sif[None, :]


def similarity_scores(slide_embeddings: np.ndarray,
                      topic_instances: list[list[np.ndarray]],
                      alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """Mean cosine of each slide embedding to each topic's instances, times count^alpha.

    Zero-norm vectors (slide or instance) contribute cosine 0 and are logged.
    """
    if not 0 <= alpha <= 0.25:
        raise ValueError(f"alpha must lie in [0, 0.25], got {alpha}")
    S = np.asarray(slide_embeddings, dtype=np.float64)
    n_slides = S.shape[0]
    n_topics = len(topic_instances)
    if n_topics == 0:
        return np.zeros((n_slides, 0))
    counts = np.array([len(inst) for inst in topic_instances])
    if np.any(counts == 0):
        raise ValueError("every topic needs at least one instance")

    S_norm = _normalize_rows(S, "slide embedding")
    inst = np.vstack([v for group in topic_instances for v in group])
    inst_norm = _normalize_rows(inst, "topic instance")
    cos = S_norm @ inst_norm.T  # (n_slides, total_instances)

    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    sums = np.add.reduceat(cos, starts, axis=1)
    means = sums / counts[None, :]
    return means * counts[None, :] ** alpha


def _normalize_rows(x: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    zero = norms == 0
    if np.any(zero):
        logger.warning("%d %s vector(s) have zero norm; cosine treated as 0",
                       int(zero.sum()), what)
    safe = np.where(zero, 1.0, norms)
    return x / safe[:, None]


def minmax_normalize(x: np.ndarray) -> np.ndarray:
    """Scale all entries to [0, 1]; constant matrices collapse to zeros."""
    if x.size == 0:
        return x.copy()
    lo = float(x.min())
    hi = float(x.max())
    if hi == lo:
        logger.warning("constant score matrix: min-max normalization yields all zeros")
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def final_scores(ss: np.ndarray, cs: np.ndarray, d: float) -> np.ndarray:
    """Combine min-max normalized importance and similarity with weight d."""
    if not 0 <= d <= 1:
        raise ValueError(f"d must lie in [0, 1], got {d}")
    if ss.shape != cs.shape:
        raise ValueError(f"shape mismatch: ss {ss.shape} vs cs {cs.shape}")
    return d * minmax_normalize(ss) + (1.0 - d) * minmax_normalize(cs)


def build_matrix(corpus: Corpus, bundles: dict[str, TensorBundle],
                 k: float = DEFAULT_K, alpha: float = DEFAULT_ALPHA,
                 d: float = DEFAULT_D, phi: float | None = None,
                 topics: TopicSet | None = None,
                 return_components: bool = False):
    """Run the full scoring pipeline over every deck of the corpus.

    Slides of all decks are stacked in corpus order into the rows of M.
    Deterministic given inputs and parameters.
    """
    if topics is None:
        topics = extract_topic_candidates(corpus)
    for deck in corpus:
        if deck.deck_id not in bundles:
            raise ValueError(f"missing tensor bundle for deck {deck.deck_id!r}")
    dims = {bundles[deck.deck_id].dim for deck in corpus}
    if len(dims) > 1:
        raise ValueError(f"bundles disagree on embedding dim: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    if phi is None:
        phi = default_phi(dim) if dim else 1.0

    deck_ids, counts, _ = corpus_layout(corpus)
    emb_rows = []
    ss_blocks = []
    for deck in corpus:
        bundle = bundles[deck.deck_id]
        for slide in deck.slides:
            w = slide_weights(deck, bundle, slide.index, phi)
            emb_rows.append(slide_embedding(slide, bundle, w).vector)
        ss_blocks.append(importance_scores(deck, bundle, topics, k))
    slide_embs = np.vstack(emb_rows) if emb_rows else np.zeros((0, dim))
    ss = np.vstack(ss_blocks) if ss_blocks else np.zeros((0, len(topics)))

    instances = [topic_instance_embeddings(t, corpus, bundles) for t in topics]
    cs = similarity_scores(slide_embs, instances, alpha)
    M = final_scores(ss, cs, d)

    matrix = SlideTopicMatrix(
        model=MODEL_LECTOR,
        params={"k": k, "alpha": alpha, "d": d, "phi": phi},
        deck_ids=deck_ids,
        deck_slide_counts=counts,
        topic_words=topics.words_list,
        M=M,
    )
    if return_components:
        return matrix, ScoreComponents(ss=ss, cs=cs)
    return matrix


# ---------------------------------------------------------------------------
# Persistence: <name>.matrix.json
# ---------------------------------------------------------------------------

def save_matrix(matrix: SlideTopicMatrix, path: str | Path) -> Path:
    """Write the matrix as JSON with full float precision."""
    path = Path(path)
    payload = {
        "model": matrix.model,
        "params": matrix.params,
        "deck_ids": matrix.deck_ids,
        "deck_slide_counts": matrix.deck_slide_counts,
        "slide_count": matrix.slide_count,
        "topics": [
            {"id": i, "words": list(words)} for i, words in enumerate(matrix.topic_words)
        ],
        "rows": [[float(v) for v in row] for row in matrix.M],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")
    return path


def load_matrix(path: str | Path) -> SlideTopicMatrix:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    topics = sorted(payload["topics"], key=lambda t: t["id"])
    topic_words = [tuple(t["words"]) for t in topics]
    M = np.array(payload["rows"], dtype=np.float64).reshape(
        payload["slide_count"], len(topic_words)
    )
    model = payload["model"]
    if model not in MODELS:
        raise ValueError(f"{path.name}: unknown model {model!r}")
    deck_ids = list(payload["deck_ids"])
    counts = payload.get("deck_slide_counts")
    if counts is None:
        if len(deck_ids) != 1:
            raise ValueError(
                f"{path.name}: multi-deck matrix lacks deck_slide_counts"
            )
        counts = [payload["slide_count"]]
    return SlideTopicMatrix(
        model=model,
        params=payload.get("params", {}),
        deck_ids=deck_ids,
        deck_slide_counts=list(counts),
        topic_words=topic_words,
        M=M,
    )
