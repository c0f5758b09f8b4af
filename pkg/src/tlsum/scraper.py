"""Event Scraper: search, fetch, chunk, extract dated events per chunk, deduplicate."""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import prompts
from .dates import CalendarDate, format_date, try_parse_date
from .llm import Gateway, ModelProfile
from .model import DatedEvent, EventMetadata, SourceRef, event_order
from .retrieval import Document, EmptyBody, FetchError, SearchBackend, SearchHit, snippet_document

log = logging.getLogger(__name__)

_PARA_RE = re.compile(r"\n\s*\n")
_SENT_RE = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class Chunk:
    doc_id: str
    index: int
    text: str

    @property
    def word_count(self) -> int:
        return len(self.text.split())


def _split_oversized(paragraph: str, max_words: int) -> list[str]:
    pieces: list[list[str]] = []
    current: list[str] = []
    for sentence in _SENT_RE.split(paragraph):
        words = sentence.split()
        if not words:
            continue
        if len(words) > max_words:
            if current:
                pieces.append(current)
                current = []
            for i in range(0, len(words), max_words):
                pieces.append(words[i:i + max_words])
            continue
        if current and len(current) + len(words) > max_words:
            pieces.append(current)
            current = []
        current = current + words
    if current:
        pieces.append(current)
    return [" ".join(p) for p in pieces]


def chunk_document(doc: Document, max_words: int) -> list[Chunk]:
    """Greedy packing of whole paragraphs up to ``max_words`` words per chunk.

    A paragraph longer than the limit is split on sentence boundaries, and a
    sentence longer than the limit is cut every ``max_words`` words.
    """
    if max_words <= 0:
        raise ValueError("max_words must be positive")
    texts: list[str] = []
    current: list[str] = []
    size = 0
    for para in _PARA_RE.split(doc.body):
        n = len(para.split())
        if n == 0:
            continue
        if n > max_words:
            if current:
                texts.append("\n\n".join(current))
                current, size = [], 0
            texts.extend(_split_oversized(para, max_words))
            continue
        if current and size + n > max_words:
            texts.append("\n\n".join(current))
            current, size = [], 0
        current.append(para.strip())
        size += n
    if current:
        texts.append("\n\n".join(current))
    return [Chunk(doc.doc_id, i, t) for i, t in enumerate(texts)]


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\s*|\s*```$")


def parse_json_array(text: str) -> Optional[list]:
    s = _FENCE_RE.sub("", text.strip())
    start, end = s.find("["), s.rfind("]")
    if start < 0 or end < start:
        return None
    try:
        value = json.loads(s[start:end + 1])
    except json.JSONDecodeError:
        return None
    return value if isinstance(value, list) else None


@dataclass
class ScrapeStats:
    chunks: int = 0
    extraction_failures: int = 0
    repairs: int = 0
    dropped_items: int = 0
    fetch_fallbacks: int = 0
    skipped_documents: int = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _items_to_events(items: list, chunk: Chunk, published: Optional[CalendarDate],
                     stats: ScrapeStats) -> list[DatedEvent]:
    events = []
    for item in items:
        if not isinstance(item, dict):
            stats.dropped_items += 1
            continue
        date = item.get("date")
        desc = item.get("description")
        date = try_parse_date(date, published) if isinstance(date, str) and date.strip() else None
        if date is None or not isinstance(desc, str) or not desc.strip():
            stats.dropped_items += 1
            continue
        entities = tuple(e for e in item.get("entities") or () if isinstance(e, str) and e.strip())
        events.append(DatedEvent(date, desc, entities, (SourceRef(chunk.doc_id, chunk.index),)))
    return events


def extract_events(chunk: Chunk, published: Optional[CalendarDate], gateway: Gateway,
                   profile: ModelProfile, stats: ScrapeStats | None = None) -> list[DatedEvent]:
    """One extraction call per chunk, one repair reprompt, then give up with []."""
    stats = stats if stats is not None else ScrapeStats()
    prompt = prompts.load("extract").render(
        published=format_date(published) if published else "unknown", chunk=chunk.text)
    messages = [("user", prompt)]
    text, _ = gateway.complete(profile, messages, purpose="extract")
    items = parse_json_array(text)
    if items is None:
        stats.repairs += 1
        messages += [("assistant", text), ("user", prompts.load("extract_repair").render())]
        text, _ = gateway.complete(profile, messages, purpose="extract_repair")
        items = parse_json_array(text)
    if items is None:
        stats.extraction_failures += 1
        log.info("extraction failed for %s#%d", chunk.doc_id, chunk.index)
        return []
    return _items_to_events(items, chunk, published, stats)


def dedup_events(events: Iterable[DatedEvent]) -> list[DatedEvent]:
    """Fuse events with identical (date, normalized description); union their support."""
    merged: dict[tuple, DatedEvent] = {}
    for ev in events:
        prev = merged.get(ev.key)
        if prev is None:
            merged[ev.key] = ev
        else:
            merged[ev.key] = DatedEvent(prev.date, prev.description,
                                        prev.entities + ev.entities,
                                        prev.support + ev.support,
                                        prev.aliases + ev.aliases)
    return sorted(merged.values(), key=event_order)


@dataclass
class EventScraper:
    provider: SearchBackend
    gateway: Gateway
    profile: ModelProfile
    chunk_size_words: int = 800
    max_workers: int = 1
    stats: ScrapeStats = field(default_factory=ScrapeStats)
    # hits of the most recent scrape, kept for the manifest
    last_hits: list[SearchHit] = field(default_factory=list)

    def _map(self, fn, items: Sequence) -> list:
        if self.max_workers <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            return list(pool.map(fn, items))

    def _fetch(self, hit: SearchHit) -> Optional[Document]:
        try:
            return self.provider.fetch(hit)
        except EmptyBody:
            self.stats.skipped_documents += 1
            return None
        except FetchError as exc:
            log.info("fetch failed, using snippet: %s", exc)
            self.stats.fetch_fallbacks += 1
            return snippet_document(hit)

    def scrape(self, query: str, k: int) -> EventMetadata:
        if k < 1:
            raise ValueError("k must be >= 1")
        hits = self.provider.search(query, k)
        self.last_hits = list(hits)
        docs = [d for d in self._map(self._fetch, hits) if d is not None]
        work = [(c, d.published) for d in docs for c in chunk_document(d, self.chunk_size_words)]
        self.stats.chunks += len(work)
        results = self._map(
            lambda cw: extract_events(cw[0], cw[1], self.gateway, self.profile, self.stats), work)
        # fold in (doc_id, chunk index) order whatever the completion order
        ordered = sorted(zip(work, results), key=lambda wr: (wr[0][0].doc_id, wr[0][0].index))
        events = dedup_events(ev for _, evs in ordered for ev in evs)
        return EventMetadata(tuple(events), query)
