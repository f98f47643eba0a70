"""Comparison models emitting the same slide-topic matrix shape.

TF-IDF and the binary occurrence matrix need only the corpus; TextRank ranks
noun words by PageRank over a co-occurrence graph; the attention-lite model
is a deliberately simplified stand-in for published attention-based rankers
(raw accumulated attention plus plain cosine, no discourse weighting) and is
labeled as such everywhere it surfaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .corpus import Corpus, TopicSet
from .discourse import topic_instance_embeddings
from .scoring import (
    MODEL_ATTENTION_LITE,
    MODEL_BINARY,
    MODEL_TEXTRANK,
    MODEL_TFIDF,
    SlideTopicMatrix,
    accumulated_attention,
    corpus_layout,
    minmax_normalize,
)
from .tensors import TensorBundle

logger = logging.getLogger(__name__)

ATTENTION_LITE_CAVEAT = (
    "attention-lite is a simplified approximation of published attention-based "
    "keyphrase rankers, not a faithful reimplementation"
)


@dataclass(frozen=True)
class TextRankParams:
    window: int = 2
    damping: float = 0.85
    tol: float = 1e-6
    max_iter: int = 100

    def __post_init__(self):
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if not 0 < self.damping < 1:
            raise ValueError(f"damping must lie in (0, 1), got {self.damping}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


def _occurrence_counts(corpus: Corpus, topics: TopicSet) -> np.ndarray:
    """(slide, topic) occurrence counts over the stacked corpus rows."""
    _, counts, rows = corpus_layout(corpus)
    tf = np.zeros((sum(counts), len(topics)))
    for j, topic in enumerate(topics):
        for occ in topic.occurrences:
            tf[rows[(occ.deck_id, occ.slide_index)], j] += 1.0
    return tf


def tfidf_matrix(corpus: Corpus, topics: TopicSet) -> SlideTopicMatrix:
    """M_ij = tf(topic j on slide i) * ln(N / df_j)."""
    deck_ids, counts, _ = corpus_layout(corpus)
    tf = _occurrence_counts(corpus, topics)
    n_slides = tf.shape[0]
    df = (tf > 0).sum(axis=0)
    idf = np.zeros(len(topics))
    present = df > 0
    idf[present] = np.log(n_slides / df[present])
    return SlideTopicMatrix(
        model=MODEL_TFIDF,
        params={},
        deck_ids=deck_ids,
        deck_slide_counts=counts,
        topic_words=topics.words_list,
        M=tf * idf[None, :],
    )


def binary_matrix(corpus: Corpus, topics: TopicSet) -> SlideTopicMatrix:
    """M_ij = 1 if topic j appears on slide i, else 0."""
    deck_ids, counts, _ = corpus_layout(corpus)
    tf = _occurrence_counts(corpus, topics)
    return SlideTopicMatrix(
        model=MODEL_BINARY,
        params={},
        deck_ids=deck_ids,
        deck_slide_counts=counts,
        topic_words=topics.words_list,
        M=(tf > 0).astype(np.float64),
    )


def noun_cooccurrence_edges(corpus: Corpus, window: int) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Vertices (all noun surfaces) and undirected co-occurrence edges.

    Two noun tokens co-occur when they lie within ``window`` positions of
    each other in a slide's flattened token sequence (non-noun tokens still
    occupy positions). Edges are unweighted and deduplicated; both directions
    are returned for the power iteration.
    """
    vocab: dict[str, int] = {}
    for deck in corpus:
        for slide in deck.slides:
            for tok in slide.tokens():
                if tok.is_noun and tok.surface not in vocab:
                    vocab[tok.surface] = 0
    words = sorted(vocab)
    index = {w: i for i, w in enumerate(words)}

    pairs: set[tuple[int, int]] = set()
    for deck in corpus:
        for slide in deck.slides:
            toks = slide.tokens()
            for i, tok in enumerate(toks):
                if not tok.is_noun:
                    continue
                for j in range(i + 1, min(i + window, len(toks))):
                    other = toks[j]
                    if not other.is_noun:
                        continue
                    a, b = index[tok.surface], index[other.surface]
                    if a == b:
                        continue
                    pairs.add((min(a, b), max(a, b)))
    if pairs:
        arr = np.array(sorted(pairs), dtype=np.int64)
        src = np.concatenate([arr[:, 0], arr[:, 1]])
        dst = np.concatenate([arr[:, 1], arr[:, 0]])
    else:
        src = np.zeros(0, dtype=np.int64)
        dst = np.zeros(0, dtype=np.int64)
    return words, src, dst


def textrank_matrix(corpus: Corpus, topics: TopicSet,
                    params: TextRankParams = TextRankParams()) -> SlideTopicMatrix:
    """PageRank word scores over the whole-corpus co-occurrence graph.

    A topic's score is the sum of its constituent word scores; M projects the
    score onto the slides where the topic occurs (0 elsewhere). If the power
    iteration does not converge within max_iter, the result is still returned
    with params["converged"] = False.
    """
    deck_ids, counts, _ = corpus_layout(corpus)
    words, src, dst = noun_cooccurrence_edges(corpus, params.window)
    n = len(words)
    if n > 0:
        scores, converged, iters = _kernels.pagerank_edges(
            src, dst, n, params.damping, params.tol, params.max_iter
        )
        if not converged:
            logger.warning("PageRank did not converge in %d iterations", params.max_iter)
    else:
        scores, converged, iters = np.zeros(0), True, 0
    rank = dict(zip(words, scores))

    topic_scores = np.array(
        [sum(rank.get(w, 0.0) for w in t.words) for t in topics]
    ) if len(topics) else np.zeros(0)
    tf = _occurrence_counts(corpus, topics)
    M = (tf > 0) * topic_scores[None, :]
    return SlideTopicMatrix(
        model=MODEL_TEXTRANK,
        params={
            "window": params.window,
            "damping": params.damping,
            "tol": params.tol,
            "max_iter": params.max_iter,
            "converged": bool(converged),
            "iterations": int(iters),
        },
        deck_ids=deck_ids,
        deck_slide_counts=counts,
        topic_words=topics.words_list,
        M=M,
    )


def attention_lite_matrix(corpus: Corpus, bundles: dict[str, TensorBundle],
                          topics: TopicSet, k: float = 1e-3) -> SlideTopicMatrix:
    """Simplified attention baseline: raw attention + plain cosine, mixed 50/50.

    The accumulated attention is used without any frequency correction (k is
    recorded for provenance only), and the similarity side compares each
    topic's mean instance embedding with the unweighted mean embedding of all
    slide words.
    """
    logger.info("%s", ATTENTION_LITE_CAVEAT)
    deck_ids, counts, _ = corpus_layout(corpus)
    a_blocks = []
    mean_rows = []
    for deck in corpus:
        bundle = bundles[deck.deck_id]
        a_blocks.append(accumulated_attention(deck, bundle, topics))
        for st in bundle.per_slide:
            emb = np.asarray(st.embeddings, dtype=np.float64)
            if emb.shape[0] == 0:
                raise ValueError(f"deck {deck.deck_id!r} has an empty slide")
            mean_rows.append(emb.mean(axis=0))
    a = np.vstack(a_blocks) if a_blocks else np.zeros((0, len(topics)))
    slide_means = np.vstack(mean_rows) if mean_rows else np.zeros((0, 0))

    n_topics = len(topics)
    cos = np.zeros((slide_means.shape[0], n_topics))
    if n_topics:
        topic_means = np.vstack([
            np.mean(topic_instance_embeddings(t, corpus, bundles), axis=0)
            for t in topics
        ])
        s_norm = np.linalg.norm(slide_means, axis=1)
        t_norm = np.linalg.norm(topic_means, axis=1)
        s_safe = np.where(s_norm == 0, 1.0, s_norm)
        t_safe = np.where(t_norm == 0, 1.0, t_norm)
        cos = (slide_means / s_safe[:, None]) @ (topic_means / t_safe[:, None]).T

    M = 0.5 * minmax_normalize(a) + 0.5 * minmax_normalize(cos)
    return SlideTopicMatrix(
        model=MODEL_ATTENTION_LITE,
        params={"k": k},
        deck_ids=deck_ids,
        deck_slide_counts=counts,
        topic_words=topics.words_list,
        M=M,
    )
