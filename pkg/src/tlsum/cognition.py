"""Global event memory: deterministic fusion of scraped metadata plus an optional,
validated rewrite pass by the reasoning model."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from . import prompts
from .dates import try_parse_date
from .llm import Gateway, ModelProfile
from .model import DatedEvent, EpisodeConfig, EventMetadata, GlobalEventMemory
from .scraper import EventScraper, parse_json_array
from .text import normalize_description, unigram_f1

log = logging.getLogger(__name__)

FUSION_THRESHOLD = 0.6


class EmptyCognition(Exception):
    pass


def _linkage(a: DatedEvent, b: DatedEvent) -> float:
    """Smallest pairwise similarity between the two events' descriptions (complete linkage)."""
    return min(unigram_f1(x, y) for x in a.aliases for y in b.aliases)


def _fuse(base: DatedEvent, other: DatedEvent) -> DatedEvent:
    desc = base.description if len(base.description) >= len(other.description) else other.description
    return DatedEvent(base.date, desc, base.entities + other.entities,
                      base.support + other.support, base.aliases + other.aliases)


def _find_partner(events: list[DatedEvent], incoming: DatedEvent, threshold: float) -> Optional[int]:
    norm = {normalize_description(a) for a in incoming.aliases}
    best, best_score = None, -1.0
    for i, ev in enumerate(events):
        if ev.date != incoming.date:
            continue
        if norm & {normalize_description(a) for a in ev.aliases}:
            return i
        score = _linkage(ev, incoming)
        if score >= threshold and score > best_score:
            best, best_score = i, score
    return best


def merge_metadata(existing: GlobalEventMemory, incoming: EventMetadata,
                   threshold: float = FUSION_THRESHOLD) -> GlobalEventMemory:
    """Union of events; same-date events whose descriptions are all pairwise similar
    (unigram F1 >= threshold) fuse into one, keeping the longer description."""
    events = list(existing.events)
    for inc in incoming.events:
        i = _find_partner(events, inc, threshold)
        if i is None:
            events.append(inc)
        else:
            events[i] = _fuse(events[i], inc)
    return GlobalEventMemory(tuple(events), existing.revision + 1)


def validate_synthesis(before: GlobalEventMemory, items: list,
                       threshold: float = FUSION_THRESHOLD) -> Optional[tuple[DatedEvent, ...]]:
    """Map a rewritten event list back onto ``before``; None if anything was lost,
    added, re-dated, or rewritten beyond recognition."""
    if len(items) != len(before.events):
        return None
    parsed = []
    for item in items:
        if not isinstance(item, dict) or not isinstance(item.get("description"), str):
            return None
        date = try_parse_date(str(item.get("date", "")))
        if date is None or not item["description"].strip():
            return None
        ents = tuple(e for e in item.get("entities") or () if isinstance(e, str))
        parsed.append((date, item["description"], ents))
    unused = list(range(len(parsed)))
    rewritten = []
    for ev in before.events:
        for j in unused:
            date, desc, ents = parsed[j]
            if date == ev.date and all(unigram_f1(desc, a) >= threshold for a in ev.aliases):
                unused.remove(j)
                rewritten.append(DatedEvent(ev.date, desc, ev.entities + ents, ev.support,
                                            (desc, *ev.aliases)))
                break
        else:
            return None
    return tuple(rewritten)


@dataclass
class GlobalCognition:
    gateway: Optional[Gateway]
    profile: Optional[ModelProfile]
    query: str
    synthesize: bool = True
    threshold: float = FUSION_THRESHOLD
    last_synthesis: str = "skipped"

    def _synthesis(self, merged: GlobalEventMemory) -> GlobalEventMemory:
        if not self.synthesize or self.gateway is None or not merged.events:
            self.last_synthesis = "skipped"
            return merged
        prompt = prompts.load("synthesize").render(query=self.query, events=merged.render())
        text, _ = self.gateway.complete(self.profile, [("user", prompt)], purpose="synthesize")
        items = parse_json_array(text)
        events = validate_synthesis(merged, items, self.threshold) if items is not None else None
        if events is None:
            log.info("synthesis rejected; keeping deterministic merge")
            self.last_synthesis = "rejected"
            return merged
        self.last_synthesis = "accepted"
        return GlobalEventMemory(events, merged.revision)

    def init_memory(self, scraper: EventScraper, config: EpisodeConfig) -> GlobalEventMemory:
        return self.init_from_metadata(scraper.scrape(config.query, config.n_init))

    def init_from_metadata(self, metadata: EventMetadata) -> GlobalEventMemory:
        if not metadata.events:
            raise EmptyCognition(f"no dated events for {metadata.source_query!r}")
        merged = merge_metadata(GlobalEventMemory(), metadata, self.threshold)
        merged = GlobalEventMemory(merged.events, 0)
        return self._synthesis(merged)

    def update_memory(self, memory: GlobalEventMemory, new_metadata: EventMetadata) -> GlobalEventMemory:
        merged = merge_metadata(memory, new_metadata, self.threshold)
        if not new_metadata.events:
            self.last_synthesis = "skipped"
            return merged
        return self._synthesis(merged)
