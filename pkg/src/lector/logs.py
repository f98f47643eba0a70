"""Reading-event ingestion, dwell-time estimation, and preference vectors.

Events CSV header: ``user_id,material_id,operation,page,event_time`` with
ISO-8601 timestamps. Dwell time attributes each inter-event gap to the page
of the earlier event, clamped at a cap; a CLOSE suspends attribution until
the next event. Page n of a material maps to slide index n-1.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .scoring import SlideTopicMatrix

logger = logging.getLogger(__name__)

EVENTS_HEADER = ["user_id", "material_id", "operation", "page", "event_time"]

OPERATIONS = (
    "OPEN",
    "CLOSE",
    "SEARCH",
    "NEXT",
    "PREV",
    "PAGE_JUMP",
    "ADD_BOOKMARK",
    "BOOKMARK_JUMP",
    "DEL_BOOKMARK",
    "ADD_MARKER",
    "DEL_MARKER",
    "ADD_MEMO",
    "DEL_MEMO",
    "CHANGE_MEMO",
)

# Short operation names seen in raw exports, folded onto the canonical set.
OPERATION_ALIASES = {"JUMP": "PAGE_JUMP", "MARKER": "ADD_MARKER"}

DEFAULT_CAP_SECONDS = 600.0

BASIS_SLIDES = "SLIDES"
BASIS_TOPICS = "TOPICS"


@dataclass(frozen=True)
class ReadingEvent:
    user_id: str
    material_id: str
    operation: str
    page: int
    timestamp: datetime


@dataclass(frozen=True)
class ActivityFeatures:
    counts: dict[str, int]  # one entry per operation name
    read_time: float

    def vector(self) -> np.ndarray:
        return np.array([self.counts[op] for op in OPERATIONS] + [self.read_time])


FEATURE_NAMES = list(OPERATIONS) + ["READ_TIME"]


@dataclass(frozen=True)
class PreferenceVector:
    user_id: str
    basis: str  # SLIDES or TOPICS
    values: np.ndarray


def load_events(path: str | Path) -> list[ReadingEvent]:
    """Parse and sort events by (user, material, timestamp); stable for ties."""
    path = Path(path)
    events: list[ReadingEvent] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in EVENTS_HEADER if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path.name}: missing columns {missing}")
        for rownum, row in enumerate(reader, start=2):
            op = row["operation"].strip()
            op = OPERATION_ALIASES.get(op, op)
            if op not in OPERATIONS:
                raise ValueError(
                    f"{path.name} row {rownum}: unknown operation {row['operation']!r}"
                )
            try:
                page = int(row["page"])
            except ValueError as exc:
                raise ValueError(f"{path.name} row {rownum}: bad page {row['page']!r}") from exc
            if page < 1:
                raise ValueError(f"{path.name} row {rownum}: page must be >= 1, got {page}")
            try:
                ts = datetime.fromisoformat(row["event_time"].strip())
            except ValueError as exc:
                raise ValueError(
                    f"{path.name} row {rownum}: unparseable timestamp {row['event_time']!r}"
                ) from exc
            events.append(
                ReadingEvent(
                    user_id=row["user_id"].strip(),
                    material_id=row["material_id"].strip(),
                    operation=op,
                    page=page,
                    timestamp=ts,
                )
            )
    events.sort(key=lambda e: (e.user_id, e.material_id, e.timestamp))
    return events


def save_events(rows: list[ReadingEvent], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENTS_HEADER)
        for e in rows:
            writer.writerow(
                [e.user_id, e.material_id, e.operation, e.page, e.timestamp.isoformat(sep=" ")]
            )
    return path


def sessionize_reading_time(
    events: list[ReadingEvent], cap_seconds: float = DEFAULT_CAP_SECONDS
) -> dict[tuple[str, str], dict[int, float]]:
    """Dwell seconds per (user, material, page).

    Consecutive same-(user, material) events attribute their gap to the page
    of the earlier event, clamped at ``cap_seconds``; the last event of a
    stream contributes nothing, and a gap that starts at a CLOSE is dropped.
    """
    times: dict[tuple[str, str], dict[int, float]] = {}
    for prev, nxt in zip(events, events[1:]):
        key = (prev.user_id, prev.material_id)
        pages = times.setdefault(key, {})
        if (nxt.user_id, nxt.material_id) != key:
            continue
        if prev.operation == "CLOSE":
            continue
        dt = (nxt.timestamp - prev.timestamp).total_seconds()
        pages[prev.page] = pages.get(prev.page, 0.0) + min(dt, cap_seconds)
    if events:
        last = events[-1]
        times.setdefault((last.user_id, last.material_id), {})
    return times


def activity_features(
    events: list[ReadingEvent], cap_seconds: float = DEFAULT_CAP_SECONDS
) -> dict[str, ActivityFeatures]:
    """Per-user operation counts plus total sessionized reading time."""
    times = sessionize_reading_time(events, cap_seconds)
    read_time: dict[str, float] = {}
    for (user, _), pages in times.items():
        read_time[user] = read_time.get(user, 0.0) + sum(pages.values())
    features: dict[str, ActivityFeatures] = {}
    counts: dict[str, dict[str, int]] = {}
    for e in events:
        counts.setdefault(e.user_id, {op: 0 for op in OPERATIONS})[e.operation] += 1
    for user, ops in counts.items():
        features[user] = ActivityFeatures(counts=ops, read_time=read_time.get(user, 0.0))
    return features


def slide_preferences(times: dict[int, float], slide_count: int,
                      user_id: str = "") -> PreferenceVector:
    """L1-normalized per-slide reading time; page n maps to index n-1.

    Pages beyond the slide count are dropped with a warning. A student with
    zero total time has no preference signal and is rejected rather than
    silently assigned a uniform vector.
    """
    if slide_count < 1:
        raise ValueError(f"slide_count must be >= 1, got {slide_count}")
    v = np.zeros(slide_count)
    for page, secs in times.items():
        if page > slide_count:
            logger.warning("page %d beyond slide count %d dropped", page, slide_count)
            continue
        v[page - 1] += secs
    total = v.sum()
    if total == 0:
        raise ValueError(f"no reading time for user {user_id!r}")
    return PreferenceVector(user_id=user_id, basis=BASIS_SLIDES, values=v / total)


def topic_preferences(pref: PreferenceVector, matrix: SlideTopicMatrix) -> PreferenceVector:
    """Topic-basis preferences: the slide vector right-multiplied by M."""
    if pref.basis != BASIS_SLIDES:
        raise ValueError(f"expected a {BASIS_SLIDES} preference vector, got {pref.basis}")
    if pref.values.shape[0] != matrix.slide_count:
        raise ValueError(
            f"preference length {pref.values.shape[0]} does not match "
            f"matrix slide count {matrix.slide_count}"
        )
    return PreferenceVector(
        user_id=pref.user_id,
        basis=BASIS_TOPICS,
        values=pref.values @ matrix.M,
    )


def load_schedule(path: str | Path) -> list[tuple[datetime, datetime]]:
    """JSON list of {"start": ISO-8601, "end": ISO-8601} windows."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    windows = []
    for item in raw:
        start = datetime.fromisoformat(item["start"])
        end = datetime.fromisoformat(item["end"])
        if end <= start:
            raise ValueError(f"schedule window ends before it starts: {item}")
        windows.append((start, end))
    return windows


def split_in_out_class(
    events: list[ReadingEvent], schedule: list[tuple[datetime, datetime]]
) -> tuple[list[ReadingEvent], list[ReadingEvent]]:
    """Partition events into (in-class, out-class) by half-open [start, end) windows."""
    ordered = sorted(schedule, key=lambda w: w[0])
    for (s1, e1), (s2, e2) in zip(ordered, ordered[1:]):
        if s2 < e1:
            raise ValueError(f"overlapping schedule windows: {(s1, e1)} and {(s2, e2)}")
    in_events: list[ReadingEvent] = []
    out_events: list[ReadingEvent] = []
    for e in events:
        if any(start <= e.timestamp < end for start, end in ordered):
            in_events.append(e)
        else:
            out_events.append(e)
    return in_events, out_events


def global_page_times(
    events: list[ReadingEvent],
    matrix: SlideTopicMatrix,
    cap_seconds: float = DEFAULT_CAP_SECONDS,
) -> dict[str, dict[int, float]]:
    """Per-user dwell seconds on the matrix's stacked slide axis (1-based pages).

    Each material id must name a deck of the matrix; events for unknown
    materials are dropped with a warning.
    """
    times = sessionize_reading_time(events, cap_seconds)
    known = set(matrix.deck_ids)
    deck_sizes = dict(zip(matrix.deck_ids, matrix.deck_slide_counts))
    merged: dict[str, dict[int, float]] = {}
    warned: set[str] = set()
    for (user, material), pages in times.items():
        user_pages = merged.setdefault(user, {})
        if material not in known:
            if pages and material not in warned:
                logger.warning("events for unknown material %r dropped", material)
                warned.add(material)
            continue
        offset = matrix.deck_row_offset(material)
        for page, secs in pages.items():
            if page > deck_sizes[material]:
                logger.warning(
                    "page %d beyond deck %r slide count %d dropped",
                    page, material, deck_sizes[material],
                )
                continue
            gp = offset + page  # still 1-based on the stacked axis
            user_pages[gp] = user_pages.get(gp, 0.0) + secs
    return merged
