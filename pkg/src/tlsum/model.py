"""Domain values: events, memories, timelines, deficiencies, plans and episode config.

Every type here is a frozen dataclass; "updates" build a new value with a bumped
revision.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Iterable, Optional

from .dates import CalendarDate, Granularity, format_date, parse_date
from .text import normalize_description


@dataclass(frozen=True, order=True)
class SourceRef:
    doc_id: str
    chunk_index: int = 0

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "chunk": self.chunk_index}


def _unique(items: Iterable) -> tuple:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True)
class DatedEvent:
    date: CalendarDate
    description: str
    entities: tuple[str, ...] = ()
    support: tuple[SourceRef, ...] = ()
    # every description fused into this event; used for fusion decisions
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        desc = " ".join(self.description.split())
        if not desc:
            raise ValueError("event description is empty")
        object.__setattr__(self, "description", desc)
        object.__setattr__(self, "entities", _unique(self.entities))
        object.__setattr__(self, "support", _unique(self.support))
        object.__setattr__(self, "aliases", _unique((desc, *self.aliases)))

    @property
    def salience(self) -> int:
        return len({ref.doc_id for ref in self.support})

    @property
    def key(self) -> tuple[CalendarDate, str]:
        return self.date, normalize_description(self.description)

    def to_dict(self) -> dict:
        return {
            "date": format_date(self.date),
            "description": self.description,
            "entities": list(self.entities),
            "support": [r.to_dict() for r in self.support],
            "salience": self.salience,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatedEvent":
        return cls(
            date=parse_date(d["date"]),
            description=d["description"],
            entities=tuple(d.get("entities", ())),
            support=tuple(SourceRef(s["doc_id"], s.get("chunk", 0)) for s in d.get("support", ())),
        )


def event_order(e: DatedEvent) -> tuple:
    return (e.date.sort_key(), -e.salience, e.description)


@dataclass(frozen=True)
class EventMetadata:
    events: tuple[DatedEvent, ...]
    source_query: str = ""

    def __post_init__(self):
        keys = [e.key for e in self.events]
        if len(keys) != len(set(keys)):
            raise ValueError("duplicate (date, description) in event metadata")

    def to_dict(self) -> dict:
        return {"source_query": self.source_query, "events": [e.to_dict() for e in self.events]}


@dataclass(frozen=True)
class GlobalEventMemory:
    events: tuple[DatedEvent, ...] = ()
    revision: int = 0

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(sorted(self.events, key=event_order)))

    def __len__(self) -> int:
        return len(self.events)

    def to_dict(self) -> dict:
        return {"revision": self.revision, "events": [e.to_dict() for e in self.events]}

    def render(self) -> str:
        return "\n".join(f"{format_date(e.date)}: {e.description}" for e in self.events)


@dataclass(frozen=True)
class TimelineEntry:
    date: CalendarDate
    summary: str
    support: tuple[SourceRef, ...] = ()
    introduced_at_iteration: int = 0
    last_revised_at_iteration: int = 0

    def __post_init__(self):
        if not self.date.is_day:
            raise ValueError(f"timeline entries are day-granular, got {self.date}")
        summary = " ".join(self.summary.split())
        if not summary:
            raise ValueError("timeline entry summary is empty")
        object.__setattr__(self, "summary", summary)
        object.__setattr__(self, "support", _unique(self.support))

    @property
    def salience(self) -> int:
        return len({ref.doc_id for ref in self.support})

    def to_dict(self) -> dict:
        return {
            "date": format_date(self.date),
            "summary": self.summary,
            "sources": _unique(r.doc_id for r in self.support),
        }


def _check_entries(entries: tuple[TimelineEntry, ...]) -> None:
    dates = [e.date for e in entries]
    if dates != sorted(dates) or len(set(dates)) != len(dates):
        raise ValueError("timeline entries must be sorted with unique dates")


@dataclass(frozen=True)
class TimelineMemory:
    entries: tuple[TimelineEntry, ...] = ()
    revision: int = 0

    def __post_init__(self):
        _check_entries(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, date: CalendarDate) -> Optional[TimelineEntry]:
        for e in self.entries:
            if e.date == date:
                return e
        return None

    def dates(self) -> list[CalendarDate]:
        return [e.date for e in self.entries]

    def render(self) -> str:
        return timeline_to_text(self)

    def to_dict(self) -> dict:
        return {"revision": self.revision, "entries": [e.to_dict() for e in self.entries]}


@dataclass(frozen=True)
class SubTimeline:
    entries: tuple[TimelineEntry, ...] = ()

    def __post_init__(self):
        _check_entries(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def validate_timeline(memory: TimelineMemory) -> None:
    """Shared invariant check: sorted, one entry per date, day granularity, non-empty text."""
    _check_entries(memory.entries)
    for e in memory.entries:
        assert e.date.granularity is Granularity.DAY
        assert e.summary.strip()


class DeficiencyKind(str, enum.Enum):
    MISSING_EVENT = "MissingEvent"
    COARSE_TIMESTAMP = "CoarseTimestamp"
    UNDER_SPECIFIED = "UnderSpecified"
    SPARSE_REGION = "SparseRegion"


@dataclass(frozen=True)
class Deficiency:
    kind: DeficiencyKind
    note: str
    anchor: Optional[CalendarDate] = None
    # end of the interval; only SparseRegion carries one
    end: Optional[CalendarDate] = None

    def __post_init__(self):
        kind = DeficiencyKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is DeficiencyKind.SPARSE_REGION and (self.anchor is None or self.end is None):
            raise ValueError("SparseRegion needs an interval")

    def describe(self) -> str:
        if self.kind is DeficiencyKind.SPARSE_REGION:
            return f"{self.kind.value}: {self.anchor} to {self.end}: {self.note}"
        where = f" {self.anchor}" if self.anchor else ""
        return f"{self.kind.value}{where}: {self.note}"

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind.value, "note": self.note}
        if self.anchor is not None:
            d["anchor"] = format_date(self.anchor)
        if self.end is not None:
            d["end"] = format_date(self.end)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Deficiency":
        return cls(
            kind=DeficiencyKind(d["kind"]),
            note=d.get("note", ""),
            anchor=parse_date(d["anchor"]) if d.get("anchor") else None,
            end=parse_date(d["end"]) if d.get("end") else None,
        )


class Verdict(str, enum.Enum):
    CONTINUE = "Continue"
    TERMINATE = "Terminate"


@dataclass(frozen=True)
class PlanItem:
    deficiency: Deficiency
    queries: tuple[str, ...]

    def __post_init__(self):
        queries = tuple(q.strip() for q in self.queries if q.strip())
        if not queries:
            raise ValueError("a plan item needs at least one query")
        object.__setattr__(self, "queries", queries)


@dataclass(frozen=True)
class SearchPlan:
    items: tuple[PlanItem, ...] = ()
    verdict: Verdict = Verdict.TERMINATE
    source: str = "analyzer"

    def __post_init__(self):
        object.__setattr__(self, "verdict", Verdict(self.verdict))
        if self.verdict is Verdict.TERMINATE and self.items:
            raise ValueError("a terminating plan carries no items")

    @property
    def queries(self) -> list[str]:
        return [q for item in self.items for q in item.queries]

    def render(self) -> str:
        lines = []
        for item in self.items:
            lines.append(f"- {item.deficiency.describe()}")
            lines.extend(f"    search: {q}" for q in item.queries)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "source": self.source,
            "items": [
                {"deficiency": it.deficiency.to_dict(), "queries": list(it.queries)}
                for it in self.items
            ],
        }


@dataclass(frozen=True)
class EpisodeConfig:
    query: str
    n_init: int = 20
    n_exp: int = 20
    top_k: int = 20
    max_iterations: int = 5
    max_searches_per_iteration: int = 8
    token_budget: int = 1_000_000
    chunk_size_words: int = 800
    seed: int = 0

    def __post_init__(self):
        if not self.query.strip():
            raise ValueError("query is empty")
        for f in fields(self):
            if f.name in ("query", "seed"):
                continue
            value = getattr(self, f.name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ValueError(f"{f.name} must be a positive integer, got {value!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def with_overrides(self, **overrides) -> "EpisodeConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


# canonical timeline forms

def timeline_to_text(memory: TimelineMemory) -> str:
    return "".join(f"{format_date(e.date)}: {e.summary}\n" for e in memory.entries)


def timeline_to_json(memory: TimelineMemory, query: str) -> str:
    doc = {"query": query, "entries": [e.to_dict() for e in memory.entries]}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def timeline_from_json(payload: str | dict) -> tuple[str, TimelineMemory]:
    doc = json.loads(payload) if isinstance(payload, str) else payload
    entries = []
    for item in doc["entries"]:
        entries.append(TimelineEntry(
            date=parse_date(item["date"]),
            summary=item["summary"],
            support=tuple(SourceRef(s) for s in item.get("sources", ())),
        ))
    entries.sort(key=lambda e: e.date)
    return doc.get("query", ""), TimelineMemory(tuple(entries))
