"""Slide-deck corpus loading and topic-candidate extraction.

A deck file is UTF-8 JSON lines named ``<deck_id>.slides.jsonl``, one slide
object per line, lines in slide-index order::

    {"index": 0, "title": [{"surface": "recursion", "pos": "NOUN"}], "body": [...]}

Tokenization, text cleaning and part-of-speech tagging all happen upstream;
this module only consumes their output. Any pos tag other than ``"NOUN"``
is folded into ``"OTHER"``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

logger = logging.getLogger(__name__)

NOUN = "NOUN"
OTHER = "OTHER"

DECK_SUFFIX = ".slides.jsonl"


class CorpusError(ValueError):
    """Raised when a deck file violates the corpus format."""


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str

    @property
    def is_noun(self) -> bool:
        return self.pos == NOUN


@dataclass(frozen=True)
class Slide:
    index: int
    title: tuple[Token, ...]
    body: tuple[Token, ...]

    def tokens(self) -> tuple[Token, ...]:
        """All tokens in tensor-alignment order: title first, then body."""
        return self.title + self.body

    @property
    def n_words(self) -> int:
        return len(self.title) + len(self.body)


@dataclass(frozen=True)
class SlideDeck:
    deck_id: str
    slides: tuple[Slide, ...]


Corpus = list[SlideDeck]


class Occurrence(NamedTuple):
    deck_id: str
    slide_index: int
    start: int  # position in the slide's flattened title+body order


@dataclass(frozen=True)
class TopicCandidate:
    topic_id: int
    words: tuple[str, ...]
    occurrences: tuple[Occurrence, ...]

    @property
    def count(self) -> int:
        return len(self.occurrences)


class TopicSet:
    """Deduplicated topic candidates with corpus-wide occurrence counts.

    Topic ids are assigned by lexicographic order of the word sequence, so
    they are stable across runs and independent of deck listing order.
    """

    def __init__(self, topics: list[TopicCandidate]):
        self.topics = topics
        self.total_occurrences = sum(t.count for t in topics)
        self._by_words = {t.words: t for t in topics}

    def __len__(self) -> int:
        return len(self.topics)

    def __iter__(self) -> Iterator[TopicCandidate]:
        return iter(self.topics)

    def __getitem__(self, topic_id: int) -> TopicCandidate:
        return self.topics[topic_id]

    def by_words(self, words: tuple[str, ...]) -> TopicCandidate | None:
        return self._by_words.get(tuple(words))

    def relative_frequency(self, topic: TopicCandidate) -> float:
        """Occurrences of the topic over all candidate occurrences."""
        return topic.count / self.total_occurrences

    @property
    def words_list(self) -> list[tuple[str, ...]]:
        return [t.words for t in self.topics]


def _parse_token(obj: dict, where: str) -> Token:
    if not isinstance(obj, dict) or "surface" not in obj or "pos" not in obj:
        raise CorpusError(f"{where}: token must have 'surface' and 'pos': {obj!r}")
    surface = obj["surface"]
    if not isinstance(surface, str) or not surface or any(c.isspace() for c in surface):
        raise CorpusError(f"{where}: surface must be a non-empty, whitespace-free string: {surface!r}")
    pos = NOUN if obj["pos"] == NOUN else OTHER
    return Token(surface=surface, pos=pos)


def _parse_deck(path: Path, deck_id: str) -> SlideDeck:
    slides: list[Slide] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{where}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict) or "index" not in obj:
                raise CorpusError(f"{where}: slide object must carry an 'index'")
            index = obj["index"]
            expected = len(slides)
            if index != expected:
                raise CorpusError(
                    f"{where}: slide index {index} out of order, expected {expected} "
                    f"(indices must be contiguous from 0)"
                )
            title = tuple(_parse_token(t, where) for t in obj.get("title", []))
            body = tuple(_parse_token(t, where) for t in obj.get("body", []))
            slides.append(Slide(index=index, title=title, body=body))
    if not slides:
        raise CorpusError(f"{path.name}: deck has no slides")
    return SlideDeck(deck_id=deck_id, slides=tuple(slides))


def load_corpus(path: str | Path) -> Corpus:
    """Load every ``*.slides.jsonl`` deck under ``path``, sorted by deck_id."""
    root = Path(path)
    files = sorted(root.glob(f"*{DECK_SUFFIX}"))
    if not files:
        raise CorpusError(f"no decks found in {root}")
    decks: list[SlideDeck] = []
    seen: dict[str, Path] = {}
    for f in files:
        deck_id = f.name[: -len(DECK_SUFFIX)]
        if deck_id in seen:
            raise CorpusError(f"duplicate deck_id {deck_id!r}: {f} and {seen[deck_id]}")
        seen[deck_id] = f
        decks.append(_parse_deck(f, deck_id))
    return decks


def save_deck(deck: SlideDeck, directory: str | Path) -> Path:
    """Write a deck in the jsonl format understood by :func:`load_corpus`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{deck.deck_id}{DECK_SUFFIX}"
    with open(path, "w", encoding="utf-8") as fh:
        for slide in deck.slides:
            obj = {
                "index": slide.index,
                "title": [{"surface": t.surface, "pos": t.pos} for t in slide.title],
                "body": [{"surface": t.surface, "pos": t.pos} for t in slide.body],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
    return path


def extract_topic_candidates(corpus: Corpus, n_max: int = 2) -> TopicSet:
    """Collect noun unigrams and adjacent-noun bigrams with occurrence lists.

    Bigrams require strict adjacency inside one region (title or body);
    title/body boundaries are never crossed. Occurrence positions index the
    slide's flattened title+body token order.
    """
    if n_max not in (1, 2):
        raise ValueError(f"n_max must be 1 or 2, got {n_max}")
    occurrences: dict[tuple[str, ...], list[Occurrence]] = {}

    def record(words: tuple[str, ...], occ: Occurrence) -> None:
        occurrences.setdefault(words, []).append(occ)

    for deck in corpus:
        for slide in deck.slides:
            for offset, region in ((0, slide.title), (len(slide.title), slide.body)):
                for i, tok in enumerate(region):
                    if not tok.is_noun:
                        continue
                    pos = offset + i
                    record((tok.surface,), Occurrence(deck.deck_id, slide.index, pos))
                    if n_max >= 2 and i + 1 < len(region) and region[i + 1].is_noun:
                        record(
                            (tok.surface, region[i + 1].surface),
                            Occurrence(deck.deck_id, slide.index, pos),
                        )

    topics = [
        TopicCandidate(topic_id=tid, words=words, occurrences=tuple(occs))
        for tid, (words, occs) in enumerate(sorted(occurrences.items()))
    ]
    return TopicSet(topics)
