"""Timeline Updater: parse sub-timelines and merge them into timeline memory without loss."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass
from typing import Optional

from . import prompts
from .dates import CalendarDate, format_date, try_parse_date
from .llm import Gateway, ModelProfile
from .model import GlobalEventMemory, SubTimeline, TimelineEntry, TimelineMemory
from .text import join_sentences, normalize_description, split_sentences, unigram_f1

log = logging.getLogger(__name__)

DUPLICATE_SENTENCE_F1 = 0.8
NO_LOSS_FLOOR = 0.5

_LINE_RE = re.compile(r"^\s*(?:[-*•]\s*)?\**(?P<date>[^:]{4,40}?)\**\s*:\s*(?P<summary>\S.*)$")


class EmptySubTimeline(ValueError):
    pass


class MergeMode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    ASSISTED = "assisted"


def _dated_lines(body: str) -> dict[CalendarDate, list[str]]:
    found: dict[CalendarDate, list[str]] = {}
    for line in body.splitlines():
        m = _LINE_RE.match(line)
        if not m:
            continue
        date = try_parse_date(m.group("date").strip())
        if date is None or not date.is_day:
            continue
        sentences = found.setdefault(date, [])
        seen = {normalize_description(s) for s in sentences}
        for s in split_sentences(m.group("summary")):
            if normalize_description(s) not in seen:
                seen.add(normalize_description(s))
                sentences.append(s)
    return {d: s for d, s in found.items() if s}


def parse_subtimeline(body: str) -> SubTimeline:
    """Lines of the form ``<day date>: <summary>``; everything else is ignored."""
    found = _dated_lines(body)
    if not found:
        raise EmptySubTimeline("no dated lines in update body")
    return SubTimeline(tuple(TimelineEntry(d, join_sentences(found[d])) for d in sorted(found)))


def _novel_sentences(existing: list[str], incoming: list[str]) -> list[str]:
    kept: list[str] = []
    for s in incoming:
        if all(unigram_f1(s, t) < DUPLICATE_SENTENCE_F1 for t in existing + kept):
            kept.append(s)
    return kept


def merge_deterministic(memory: TimelineMemory, sub: SubTimeline, iteration: int = 0) -> TimelineMemory:
    """Per-date union. On a shared date, sub sentences that are not near-duplicates
    (unigram F1 < 0.8 against every existing sentence) are appended."""
    if not sub.entries:
        raise EmptySubTimeline("empty sub-timeline")
    by_date = {e.date: e for e in memory.entries}
    for s in sub.entries:
        cur = by_date.get(s.date)
        if cur is None:
            by_date[s.date] = TimelineEntry(s.date, s.summary, s.support, iteration, iteration)
            continue
        existing = split_sentences(cur.summary)
        added = _novel_sentences(existing, split_sentences(s.summary))
        if added:
            by_date[s.date] = TimelineEntry(s.date, join_sentences(existing + added),
                                            cur.support + s.support,
                                            cur.introduced_at_iteration, iteration)
    entries = tuple(by_date[d] for d in sorted(by_date))
    return TimelineMemory(entries, memory.revision + 1)


def entry_preserved(before: TimelineEntry, after: Optional[TimelineEntry],
                    floor: float = NO_LOSS_FLOOR) -> bool:
    if after is None or after.date != before.date:
        return False
    old = split_sentences(before.summary) or [before.summary]
    return any(unigram_f1(s, t) >= floor for s in split_sentences(after.summary) for t in old)


def lost_entries(before: TimelineMemory, after: TimelineMemory,
                 floor: float = NO_LOSS_FLOOR) -> list[TimelineEntry]:
    return [e for e in before.entries if not entry_preserved(e, after.get(e.date), floor)]


def attach_support(sub: SubTimeline, memory_xi: GlobalEventMemory) -> SubTimeline:
    """Give each sub-timeline entry the sources of the global events on its day."""
    entries = []
    for e in sub.entries:
        refs = tuple(r for ev in memory_xi.events if ev.date == e.date for r in ev.support)
        entries.append(TimelineEntry(e.date, e.summary, e.support + refs,
                                     e.introduced_at_iteration, e.last_revised_at_iteration))
    return SubTimeline(tuple(entries))


def _render_sub(sub: SubTimeline) -> str:
    return "\n".join(f"{format_date(e.date)}: {e.summary}" for e in sub.entries)


@dataclass
class TimelineUpdater:
    mode: MergeMode = MergeMode.DETERMINISTIC
    gateway: Optional[Gateway] = None
    profile: Optional[ModelProfile] = None
    query: str = ""
    last_status: str = "deterministic"

    def merge(self, memory: TimelineMemory, sub: SubTimeline, memory_xi: GlobalEventMemory,
              iteration: int = 0) -> TimelineMemory:
        base = merge_deterministic(memory, attach_support(sub, memory_xi), iteration)
        if self.mode is MergeMode.DETERMINISTIC or self.gateway is None:
            self.last_status = "deterministic"
            return base
        prompt = prompts.load("update").render(
            query=self.query, memory=memory_xi.render() or "(empty)",
            timeline=memory.render() or "(empty)", subtimeline=_render_sub(sub))
        text, _ = self.gateway.complete(self.profile, [("user", prompt)], purpose="update")
        return self._accept(base, memory, _dated_lines(text), iteration)

    def _accept(self, base: TimelineMemory, previous: TimelineMemory,
                proposed: dict[CalendarDate, list[str]], iteration: int) -> TimelineMemory:
        """Take the model's rewrite where it keeps every entry of ``base``; re-insert
        anything it dropped. Dates outside ``base`` are ignored."""
        entries = []
        repaired = 0
        for e in base.entries:
            sentences = proposed.get(e.date)
            candidate = None
            if sentences:
                summary = join_sentences(sentences)
                revised = iteration if summary != e.summary else e.last_revised_at_iteration
                candidate = TimelineEntry(e.date, summary, e.support, e.introduced_at_iteration, revised)
            old = previous.get(e.date)
            if not entry_preserved(e, candidate) or (old is not None and not entry_preserved(old, candidate)):
                repaired += 1
                candidate = e
            entries.append(candidate)
        self.last_status = "repaired" if repaired else "assisted"
        if repaired:
            log.info("assisted merge dropped %d entries; re-inserted verbatim", repaired)
        return TimelineMemory(tuple(entries), base.revision)
