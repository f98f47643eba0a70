"""Discourse-based word probabilities and contextualized slide embeddings.

A slide's body words are weighted by how coherent they are with the slide
title, which is itself weighted by its coherence with the deck's main title
(the title of slide 0). The weighted average of the body-word embeddings is
the slide embedding. Degenerate slides (missing titles or bodies) fall back
to uniform weights, the maximum-entropy choice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, Slide, SlideDeck, TopicCandidate
from .tensors import TensorBundle


@dataclass(frozen=True)
class WeightVector:
    slide_index: int
    weights: np.ndarray  # distribution over the slide's body words


@dataclass(frozen=True)
class SlideEmbedding:
    slide_index: int
    vector: np.ndarray


def default_phi(dim: int) -> float:
    """Default softmax temperature: sqrt of the embedding dimension."""
    return math.sqrt(dim)


def softmax_rows(scores, phi: float) -> np.ndarray:
    """Row-wise softmax of scores/phi, stabilized by per-row max subtraction."""
    if phi <= 0:
        raise ValueError(f"phi must be positive, got {phi}")
    s = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise ValueError("softmax input must be finite")
    s = s / phi
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def attention_over_attention(E_b, E_a, phi: float) -> np.ndarray:
    """Probability of each word of A under the multi-word discourse B.

    With S = E_b @ E_a.T / phi, the column-softmaxed matrix is averaged along
    each row, giving one convex weight per discourse word; those weights mix
    the row-softmaxed distributions into a single distribution over A. The
    result is non-negative and sums to 1 by construction.
    """
    E_b = np.asarray(E_b, dtype=np.float64)
    E_a = np.asarray(E_a, dtype=np.float64)
    if E_b.ndim != 2 or E_a.ndim != 2 or E_b.shape[1] != E_a.shape[1]:
        raise ValueError(
            f"embedding dimension mismatch: {E_b.shape} vs {E_a.shape}"
        )
    if E_b.shape[0] < 1 or E_a.shape[0] < 1:
        raise ValueError("both word sets must be non-empty")
    S = E_b @ E_a.T
    row_soft = softmax_rows(S, phi)          # each row: distribution over A
    col_soft = softmax_rows(S.T, phi).T      # each column: distribution over B
    query_weights = col_soft.mean(axis=1)    # length |B|, sums to 1
    return query_weights @ row_soft


def slide_weights(deck: SlideDeck, bundle: TensorBundle, slide_index: int,
                  phi: float | None = None) -> WeightVector:
    """Distribution over a slide's body words under the deck's discourse.

    The weight of body word w is Pr(title | main title) * Pr(w | title),
    where the first factor applies attention-over-attention between the main
    title (slide 0) and this slide's title, and the second is a row softmax
    of title-body embedding dot products. Missing titles fall back to
    uniform factors.
    """
    slide = deck.slides[slide_index]
    st = bundle.per_slide[slide_index]
    if phi is None:
        phi = default_phi(bundle.dim)
    n_title = len(slide.title)
    n_body = len(slide.body)
    if n_body == 0:
        return WeightVector(slide_index, np.zeros(0))
    emb = np.asarray(st.embeddings, dtype=np.float64)
    E_title = emb[:n_title]
    E_body = emb[n_title : n_title + n_body]

    if n_title == 0:
        return WeightVector(slide_index, np.full(n_body, 1.0 / n_body))

    main = deck.slides[0]
    n_main = len(main.title)
    if n_main == 0:
        title_prob = np.full(n_title, 1.0 / n_title)
    else:
        E_main = np.asarray(bundle.per_slide[0].embeddings, dtype=np.float64)[:n_main]
        title_prob = attention_over_attention(E_main, E_title, phi)
    body_given_title = softmax_rows(E_title @ E_body.T, phi)
    return WeightVector(slide_index, title_prob @ body_given_title)


def slide_embedding(slide: Slide, bundle: TensorBundle,
                    weights: WeightVector) -> SlideEmbedding:
    """Weighted average of the slide's body-word embeddings.

    Slides with an empty body fall back to the plain mean of their title
    embeddings; slides with no words at all are an error.
    """
    st = bundle.per_slide[slide.index]
    emb = np.asarray(st.embeddings, dtype=np.float64)
    n_title = len(slide.title)
    if len(slide.body) > 0:
        vec = weights.weights @ emb[n_title:]
    elif n_title > 0:
        vec = emb[:n_title].mean(axis=0)
    else:
        raise ValueError(f"empty slide {slide.index}: no title and no body")
    return SlideEmbedding(slide.index, vec)


def topic_instance_embeddings(topic: TopicCandidate, corpus: Corpus,
                              bundles: dict[str, TensorBundle]) -> list[np.ndarray]:
    """One contextual vector per occurrence of the topic.

    Unigrams yield the word's embedding row on that slide; bigrams yield the
    unweighted mean of the two constituent rows.
    """
    if not topic.occurrences:
        raise ValueError(f"topic {topic.words} has no occurrences")
    span = len(topic.words)
    vectors: list[np.ndarray] = []
    for occ in topic.occurrences:
        bundle = bundles.get(occ.deck_id)
        if bundle is None:
            raise ValueError(f"no bundle for deck {occ.deck_id!r}")
        if occ.slide_index >= len(bundle.per_slide):
            raise ValueError(
                f"occurrence of {topic.words} points at slide {occ.slide_index} "
                f"outside bundle for deck {occ.deck_id!r}"
            )
        emb = np.asarray(bundle.per_slide[occ.slide_index].embeddings, dtype=np.float64)
        if occ.start + span > emb.shape[0]:
            raise ValueError(
                f"occurrence of {topic.words} at position {occ.start} exceeds "
                f"slide {occ.slide_index} word count {emb.shape[0]}"
            )
        vectors.append(emb[occ.start : occ.start + span].mean(axis=0))
    return vectors
