"""Supervisor: deterministic deficiency analysis and search-plan generation."""

from __future__ import annotations

import json
import logging
import re
import statistics
from dataclasses import dataclass
from typing import Optional

from . import prompts
from .dates import date_distance_days, format_date
from .llm import Gateway, ModelProfile
from .model import (
    Deficiency, DeficiencyKind, EpisodeConfig, GlobalEventMemory, PlanItem, SearchPlan,
    TimelineMemory, Verdict,
)
from .text import tokenize, unigram_f1

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SupervisorThresholds:
    coverage_window_days: int = 3
    coverage_similarity: float = 0.2
    min_summary_tokens: int = 8
    sparse_factor: float = 3.0
    sparse_min_gap_days: int = 14


def _coverage(timeline: TimelineMemory, memory: GlobalEventMemory,
              th: SupervisorThresholds) -> list[Deficiency]:
    found = []
    for ev in memory.events:
        if not ev.date.is_day:
            found.append(Deficiency(DeficiencyKind.COARSE_TIMESTAMP, ev.description, ev.date))
            continue
        near = any(date_distance_days(ev.date, e.date) <= th.coverage_window_days
                   for e in timeline.entries)
        best = max((unigram_f1(ev.description, e.summary) for e in timeline.entries), default=0.0)
        if not near and best < th.coverage_similarity:
            found.append(Deficiency(DeficiencyKind.MISSING_EVENT, ev.description, ev.date))
    return found


def _completeness(timeline: TimelineMemory, th: SupervisorThresholds) -> list[Deficiency]:
    return [Deficiency(DeficiencyKind.UNDER_SPECIFIED, e.summary, e.date)
            for e in timeline.entries if len(tokenize(e.summary)) < th.min_summary_tokens]


def _density(timeline: TimelineMemory, th: SupervisorThresholds) -> list[Deficiency]:
    entries = timeline.entries
    if len(entries) < 3:
        return []
    gaps = [date_distance_days(a.date, b.date) for a, b in zip(entries, entries[1:])]
    median = statistics.median(gaps)
    limit = max(th.sparse_factor * median, th.sparse_min_gap_days)
    clustered = sum(1 for g in gaps if g < median / 3)
    log.debug("gap median %.1f days, limit %.1f, %d clustered gaps", median, limit, clustered)
    return [Deficiency(DeficiencyKind.SPARSE_REGION, f"{g}-day gap", a.date, b.date)
            for g, a, b in zip(gaps, entries, entries[1:]) if g > limit]


def analyze(timeline: TimelineMemory, memory: GlobalEventMemory,
            thresholds: SupervisorThresholds = SupervisorThresholds()) -> list[Deficiency]:
    return (_coverage(timeline, memory, thresholds)
            + _completeness(timeline, thresholds)
            + _density(timeline, thresholds))


def fallback_query(d: Deficiency, query: str) -> str:
    if d.kind is DeficiencyKind.MISSING_EVENT:
        return f"{query} {d.note} {d.anchor.year}" if d.anchor else f"{query} {d.note}"
    if d.kind is DeficiencyKind.COARSE_TIMESTAMP:
        return f"{d.note} exact date"
    if d.kind is DeficiencyKind.UNDER_SPECIFIED:
        return f"{query} {format_date(d.anchor)} details"
    return f"{query} events between {format_date(d.anchor)} and {format_date(d.end)}"


def fallback_plan(deficiencies: list[Deficiency], query: str) -> SearchPlan:
    items = tuple(PlanItem(d, (fallback_query(d, query),)) for d in deficiencies)
    return SearchPlan(items, Verdict.CONTINUE, source="fallback")


def _parse_plan(text: str, deficiencies: list[Deficiency]) -> Optional[SearchPlan]:
    s = re.sub(r"^```[a-zA-Z]*\s*|\s*```$", "", text.strip())
    start, end = s.find("{"), s.rfind("}")
    if start < 0 or end < start:
        return None
    try:
        payload = json.loads(s[start:end + 1])
        raw_items = payload["items"]
    except (json.JSONDecodeError, KeyError, TypeError):
        return None
    if not isinstance(raw_items, list):
        return None
    queries: dict[int, list[str]] = {}
    for item in raw_items:
        if not isinstance(item, dict):
            return None
        idx, qs = item.get("deficiency"), item.get("queries")
        if not isinstance(idx, int) or isinstance(idx, bool) or not 1 <= idx <= len(deficiencies):
            return None
        if not isinstance(qs, list):
            return None
        queries.setdefault(idx, []).extend(q.strip() for q in qs if isinstance(q, str) and q.strip())
    if any(not queries.get(i) for i in range(1, len(deficiencies) + 1)):
        return None
    items = tuple(PlanItem(d, tuple(queries[i])) for i, d in enumerate(deficiencies, 1))
    return SearchPlan(items, Verdict.CONTINUE, source="model")


def make_plan(deficiencies: list[Deficiency], query: str, gateway: Gateway | None = None,
              profile: ModelProfile | None = None) -> SearchPlan:
    """No deficiencies means Terminate, whatever a model might say. Otherwise ask the
    model for queries and fall back to fixed templates if its answer fails validation."""
    if not deficiencies:
        return SearchPlan((), Verdict.TERMINATE)
    if gateway is None:
        return fallback_plan(deficiencies, query)
    listing = "\n".join(f"{i}. {d.describe()}" for i, d in enumerate(deficiencies, 1))
    prompt = prompts.load("plan").render(query=query, deficiencies=listing)
    text, _ = gateway.complete(profile, [("user", prompt)], purpose="plan")
    plan = _parse_plan(text, deficiencies)
    if plan is None:
        log.info("plan output malformed; using template fallback")
        return fallback_plan(deficiencies, query)
    return plan


def should_terminate(plan: SearchPlan, iteration: int, config: EpisodeConfig) -> bool:
    return plan.verdict is Verdict.TERMINATE or iteration >= config.max_iterations
