"""Shared builders for hand-constructed decks and tensor bundles."""

import numpy as np
import pytest

from lector.corpus import NOUN, OTHER, Slide, SlideDeck, Token
from lector.tensors import SlideTensors, TensorBundle


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    rows = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            if "test_acceptance.py" in rep.nodeid and rep.when in (None, "call"):
                rows.append((rep.nodeid.split("::")[-1], label))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, label in sorted(rows):
            terminalreporter.write_line(f"{label}  {name}")


def tok(surface: str, noun: bool = True) -> Token:
    return Token(surface=surface, pos=NOUN if noun else OTHER)


def make_slide(index, title, body):
    """Build a slide from lists of surfaces; '~' prefix marks a non-noun."""
    def parse(words):
        out = []
        for w in words:
            if w.startswith("~"):
                out.append(tok(w[1:], noun=False))
            else:
                out.append(tok(w))
        return tuple(out)
    return Slide(index=index, title=parse(title), body=parse(body))


def make_deck(deck_id, slides):
    return SlideDeck(deck_id=deck_id, slides=tuple(slides))


def random_bundle(deck, dim=8, seed=0):
    """Row-stochastic attention and unit-ish embeddings matching the deck."""
    rng = np.random.default_rng(seed)
    per_slide = []
    for slide in deck.slides:
        n = slide.n_words
        emb = rng.standard_normal((n, dim))
        att = rng.uniform(0.1, 1.0, size=(n, n))
        att /= att.sum(axis=1, keepdims=True)
        per_slide.append(
            SlideTensors(
                embeddings=emb.astype(np.float32),
                attention=att.astype(np.float32),
            )
        )
    return TensorBundle(deck_id=deck.deck_id, dim=dim, per_slide=tuple(per_slide))


def bundle_from_arrays(deck_id, dim, slides):
    """slides: list of (embeddings, attention) float arrays."""
    per_slide = tuple(
        SlideTensors(
            embeddings=np.asarray(e, dtype=np.float32),
            attention=np.asarray(a, dtype=np.float32),
        )
        for e, a in slides
    )
    return TensorBundle(deck_id=deck_id, dim=dim, per_slide=per_slide)


@pytest.fixture
def two_slide_deck():
    return make_deck(
        "deck-a",
        [
            make_slide(0, ["programming"], ["function", "~no", "recursion"]),
            make_slide(1, ["recursion"], ["function", "definition", "~of", "list"]),
        ],
    )
