"""Deterministic synthetic fixtures: corpora with planted key topics,
matching pseudo tensor bundles, and reading logs with a planted grade signal.

Embeddings and attention matrices are constructed, not sampled from a
language model, so the planted structure is analytically controllable:
planted words get unit embeddings with a controlled cosine to the title
direction and elevated attention column mass, both scaled by the signal
strength. At signal 0 planted and noise words are statistically
indistinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from .corpus import NOUN, OTHER, Corpus, Slide, SlideDeck, Token
from .keyeval import GoldKeyphrases
from .logs import ReadingEvent
from .scoring import SlideTopicMatrix
from .tensors import SlideTensors, TensorBundle

DECK_ID = "synth"

_FILLERS = ("no", "de", "to", "wa")

# Construction constants: coherence of a fully planted word with the title
# direction, per-occurrence embedding jitter, and the attention column boost.
_MAX_COHERENCE = 0.9
_EMB_JITTER = 0.25
_ATT_BOOST = 3.0


@dataclass(frozen=True)
class PlantedTopic:
    words: tuple[str, ...]
    salience: float = 1.0

    def __post_init__(self):
        if len(self.words) != 1:
            raise ValueError("planted topics must be single words")
        if not 0 < self.salience <= 1:
            raise ValueError(f"salience must lie in (0, 1], got {self.salience}")


def default_planted(count: int) -> tuple[PlantedTopic, ...]:
    return tuple(PlantedTopic(words=(f"topic{i:02d}",)) for i in range(count))


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    slide_count: int = 20
    vocab_size: int = 50
    planted_topics: tuple[PlantedTopic, ...] = field(default_factory=lambda: default_planted(5))
    dim: int = 16
    student_count: int = 60
    at_risk_fraction: float = 0.5
    signal_strength: float = 1.0

    def __post_init__(self):
        if not 0 <= self.signal_strength <= 1:
            raise ValueError("signal_strength must lie in [0, 1]")
        if not 0 <= self.at_risk_fraction <= 1:
            raise ValueError("at_risk_fraction must lie in [0, 1]")
        if len(self.planted_topics) >= self.vocab_size:
            raise ValueError("vocabulary must be larger than the planted set")

    @property
    def planted_words(self) -> list[str]:
        return [t.words[0] for t in self.planted_topics]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def generate_corpus(spec: SynthSpec) -> tuple[Corpus, dict[str, TensorBundle], GoldKeyphrases]:
    """Build one deck plus its pseudo tensor bundle and the gold keyphrases.

    Slide titles carry planted words with probability equal to the signal
    strength; body nouns go to the currently least-frequent words so corpus
    frequencies stay balanced; fillers keep nouns non-adjacent so the
    candidate set is exactly the vocabulary. Attention rows are normalized
    to sum to one.
    """
    rng = np.random.default_rng(spec.seed)
    planted = spec.planted_words
    salience = {t.words[0]: t.salience for t in spec.planted_topics}
    # "noise" sorts before "topic": score ties never favor the planted words
    noise_words = [f"noise{i:02d}" for i in range(len(planted), spec.vocab_size)]
    vocab = planted + noise_words

    title_dir = _unit(rng.standard_normal(spec.dim))
    # planted words share a coherent base direction; noise words draw a fresh
    # vector per occurrence so no global noise direction can dominate
    base: dict[str, np.ndarray] = {}
    for w in planted:
        c = _MAX_COHERENCE * salience[w] * spec.signal_strength
        r = _unit(rng.standard_normal(spec.dim))
        base[w] = _unit(c * title_dir + np.sqrt(max(0.0, 1.0 - c * c)) * r)

    # bodies need enough slots for noise words to match the title-driven
    # planted counts; least-frequent-first allocation then keeps corpus
    # frequencies balanced, so plantedness cannot leak into raw frequency
    # where the statistical baselines would pick it up
    n_planted = max(len(planted), 1)
    parity = min(24, -(-(spec.vocab_size - len(planted)) // n_planted) + 1)
    nouns_per_body = max(6, -(-2 * spec.vocab_size // spec.slide_count), parity)
    counts = {w: 0 for w in vocab}

    def next_nouns(k: int) -> list[str]:
        out = []
        for _ in range(k):
            jitter = rng.random(len(vocab))
            j = min(range(len(vocab)), key=lambda idx: counts[vocab[idx]] + 0.5 * jitter[idx])
            counts[vocab[j]] += 1
            out.append(vocab[j])
        return out

    slides: list[Slide] = []
    slide_tensors: list[SlideTensors] = []
    for i in range(spec.slide_count):
        if rng.random() < spec.signal_strength and planted:
            title_word = planted[i % len(planted)]
        else:
            title_word = vocab[int(rng.integers(len(vocab)))]
        counts[title_word] += 1
        title = (Token(title_word, NOUN),)

        # fillers keep nouns non-adjacent (candidates stay unigrams) and the
        # leading one separates the title word from the first body noun
        body_tokens: list[Token] = [Token(_FILLERS[int(rng.integers(len(_FILLERS)))], OTHER)]
        for w in next_nouns(nouns_per_body):
            body_tokens.append(Token(w, NOUN))
            body_tokens.append(Token(_FILLERS[int(rng.integers(len(_FILLERS)))], OTHER))
        body = tuple(body_tokens[:-1])  # trailing filler adds nothing

        slide = Slide(index=i, title=title, body=body)
        slides.append(slide)

        tokens = slide.tokens()
        n_w = len(tokens)
        emb = np.empty((n_w, spec.dim))
        for t_idx, tok in enumerate(tokens):
            if tok.is_noun and tok.surface in base:
                emb[t_idx] = _unit(base[tok.surface] + _EMB_JITTER * rng.standard_normal(spec.dim))
            else:
                emb[t_idx] = _unit(rng.standard_normal(spec.dim))

        att = rng.uniform(0.5, 1.5, size=(n_w, n_w))
        for t_idx, tok in enumerate(tokens):
            if tok.is_noun and tok.surface in salience:
                att[:, t_idx] *= 1.0 + _ATT_BOOST * spec.signal_strength * salience[tok.surface]
        att /= att.sum(axis=1, keepdims=True)

        slide_tensors.append(
            SlideTensors(
                embeddings=emb.astype(np.float32),
                attention=att.astype(np.float32),
            )
        )

    deck = SlideDeck(deck_id=DECK_ID, slides=tuple(slides))
    bundle = TensorBundle(deck_id=DECK_ID, dim=spec.dim, per_slide=tuple(slide_tensors))
    gold = GoldKeyphrases(frozenset((w,) for w in planted))
    return [deck], {DECK_ID: bundle}, gold


# ---------------------------------------------------------------------------
# Reading logs with a planted grade signal
# ---------------------------------------------------------------------------

_BASE_TIME = datetime(2023, 1, 10, 9, 0, 0)
_PREF_CONCENTRATION = 60.0
_NOISE_OPS = ("ADD_MARKER", "ADD_MEMO", "ADD_BOOKMARK")


def _profile_slide_sets(spec: SynthSpec, matrix: SlideTopicMatrix) -> tuple[list[int], list[int]]:
    """Two disjoint slide sets, each heavy in a different topic.

    Uses the columns of the first two planted topics (falling back to the
    two highest-variance columns, then to an index-parity split when the
    column structure is too uniform to separate).
    """
    S = matrix.slide_count
    words = matrix.topic_words
    planted_idx = [words.index((w,)) for w in spec.planted_words if (w,) in words]
    if len(planted_idx) >= 2:
        ja, jb = planted_idx[0], planted_idx[1]
    elif matrix.topic_count >= 2:
        spread = np.asarray(matrix.M, dtype=np.float64).std(axis=0)
        order = sorted(range(len(spread)), key=lambda j: (-spread[j], words[j]))
        ja, jb = order[0], order[1]
    else:
        ja = jb = -1
    if ja >= 0 and ja != jb:
        half = max(2, S // 2)
        col_a = matrix.M[:, ja]
        col_b = matrix.M[:, jb]
        top_a = set(sorted(range(S), key=lambda i: (-col_a[i], i))[:half])
        top_b = set(sorted(range(S), key=lambda i: (-col_b[i], i))[:half])
        only_a = sorted(top_a - top_b)
        only_b = sorted(top_b - top_a)
        size = min(len(only_a), len(only_b))  # equal sizes keep visit counts comparable
        if size >= 2:
            return only_a[:size], only_b[:size]
    return [i for i in range(S) if i % 2 == 0], [i for i in range(S) if i % 2 == 1]


def _integer_split(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of total * weights to integers summing to total."""
    raw = total * weights
    floors = np.floor(raw).astype(np.int64)
    remainder = int(total - floors.sum())
    order = np.argsort(-(raw - floors), kind="stable")
    floors[order[:remainder]] += 1
    return floors


def generate_logs(spec: SynthSpec, matrix: SlideTopicMatrix
                  ) -> tuple[list[ReadingEvent], dict[str, str]]:
    """Event streams and grades with group-dependent slide preferences.

    At-risk and safe students draw their total reading time from the same
    distribution; only the slide mixture differs, concentrated on two
    different topic-heavy slide sets and blended toward uniform as the
    signal strength decreases.
    """
    rng = np.random.default_rng(spec.seed + 1)
    S = matrix.slide_count
    set_safe, set_risk = _profile_slide_sets(spec, matrix)
    uniform = np.full(S, 1.0 / S)
    prof_safe = np.zeros(S)
    prof_safe[set_safe] = 1.0 / len(set_safe)
    prof_risk = np.zeros(S)
    prof_risk[set_risk] = 1.0 / len(set_risk)
    s = spec.signal_strength
    prof_safe = (1 - s) * uniform + s * prof_safe
    prof_risk = (1 - s) * uniform + s * prof_risk

    n_risk = int(round(spec.student_count * spec.at_risk_fraction))
    events: list[ReadingEvent] = []
    grades: dict[str, str] = {}
    risk_grades = ("D", "F")
    safe_grades = ("A", "B", "C")
    for i in range(spec.student_count):
        user = f"u{i:03d}"
        at_risk = i < n_risk
        grades[user] = risk_grades[i % 2] if at_risk else safe_grades[i % 3]
        profile = prof_risk if at_risk else prof_safe

        total = int(np.clip(rng.normal(360.0, 40.0), 200.0, 520.0))
        pref = rng.dirichlet(_PREF_CONCENTRATION * profile + 0.02)
        seconds = _integer_split(total, pref)
        n_extra = int(rng.poisson(2.0))

        visited = [p for p in range(S) if seconds[p] > 0]
        if not visited:
            visited = [0]
            seconds[0] = max(total, 1)
        t = _BASE_TIME + timedelta(hours=2 * i)
        stream: list[ReadingEvent] = []
        for k, p in enumerate(visited):
            # op choice must not depend on which slides a group prefers,
            # or navigation counts would leak the planted grade signal
            op = "OPEN" if k == 0 else ("NEXT" if k % 2 else "PAGE_JUMP")
            stream.append(ReadingEvent(user, matrix.deck_ids[0], op, p + 1, t))
            t += timedelta(seconds=int(seconds[p]))
        stream.append(ReadingEvent(user, matrix.deck_ids[0], "CLOSE", visited[-1] + 1, t))

        # decoration ops at existing timestamps: they leave dwell intact
        for _ in range(n_extra):
            at = int(rng.integers(len(stream) - 1))
            op = _NOISE_OPS[int(rng.integers(len(_NOISE_OPS)))]
            stream.append(
                ReadingEvent(user, matrix.deck_ids[0], op, stream[at].page, stream[at].timestamp)
            )
        events.extend(sorted(stream, key=lambda e: e.timestamp))
    return events, grades
