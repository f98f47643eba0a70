"""Reader for the slide-deck jsonl interchange format.

One file per deck named ``<deck_id>.slides.jsonl``; each line is one slide
object ``{"index": int, "title": [{"surface": ...}, ...], "body": [...]}``
with lines in index order. Only surfaces matter here; pos tags are carried
by the format but the extractor does not use them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

DECK_SUFFIX = ".slides.jsonl"


@dataclass(frozen=True)
class DeckText:
    deck_id: str
    slides: list[tuple[list[str], list[str]]]  # (title surfaces, body surfaces)


def read_deck(path: str | Path) -> DeckText:
    path = Path(path)
    if not path.name.endswith(DECK_SUFFIX):
        raise ValueError(f"{path.name}: deck files end with {DECK_SUFFIX}")
    deck_id = path.name[: -len(DECK_SUFFIX)]
    slides: list[tuple[list[str], list[str]]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path.name}:{lineno}: invalid JSON ({exc.msg})") from exc
            if obj.get("index") != len(slides):
                raise ValueError(
                    f"{path.name}:{lineno}: slide index {obj.get('index')} out of order"
                )
            title = [t["surface"] for t in obj.get("title", [])]
            body = [t["surface"] for t in obj.get("body", [])]
            slides.append((title, body))
    if not slides:
        raise ValueError(f"{path.name}: deck has no slides")
    return DeckText(deck_id=deck_id, slides=slides)
