"""Timeline metrics: Concat, Agree and Align ROUGE-1/2 F1 and Date F1."""

from __future__ import annotations

import json
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

from .assignment import max_weight_assignment
from .dates import CalendarDate, date_distance_days, parse_date
from .model import TimelineEntry, TimelineMemory
from .text import ngram_overlap, prf, rouge_f1, tokenize

METRICS = ("concat_r1", "concat_r2", "agree_r1", "agree_r2", "align_r1", "align_r2", "date_f1")


class NoReferences(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceTimeline:
    query: str
    entries: dict[CalendarDate, tuple[str, ...]]

    def __post_init__(self):
        for date, sentences in self.entries.items():
            if not date.is_day:
                raise ValueError(f"reference date {date} is not a day")
            if not sentences:
                raise ValueError(f"reference date {date} has no sentences")

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_mapping(cls, query: str, mapping: dict) -> "ReferenceTimeline":
        entries = {}
        for k, v in mapping.items():
            sentences = (v,) if isinstance(v, str) else tuple(v)
            entries[parse_date(k) if isinstance(k, str) else k] = sentences
        return cls(query, entries)


def load_references(path: str | os.PathLike) -> list[ReferenceTimeline]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    query = doc.get("query", "")
    return [ReferenceTimeline.from_mapping(query, tl) for tl in doc["timelines"]]


Timeline = Union[TimelineMemory, ReferenceTimeline]


def date_texts(tl: Timeline) -> list[tuple[CalendarDate, str]]:
    if isinstance(tl, ReferenceTimeline):
        pairs = [(d, " ".join(s)) for d, s in tl.entries.items()]
    else:
        pairs = [(e.date, e.summary) for e in tl.entries]
    return sorted(pairs, key=lambda p: p[0])


def _tokens(tl: Timeline, stopwords: bool) -> list[tuple[CalendarDate, list[str]]]:
    return [(d, tokenize(t, stopwords)) for d, t in date_texts(tl)]


def _ngram_count(tokens: list[str], n: int) -> int:
    return max(len(tokens) - n + 1, 0)


def concat_f1(pred: Timeline, ref: Timeline, n: int = 1, stopwords: bool = False) -> float:
    p = [t for _, toks in _tokens(pred, stopwords) for t in toks]
    r = [t for _, toks in _tokens(ref, stopwords) for t in toks]
    return rouge_f1(p, r, n)


def agree_f1(pred: Timeline, ref: Timeline, n: int = 1, stopwords: bool = False) -> float:
    p, r = dict(_tokens(pred, stopwords)), dict(_tokens(ref, stopwords))
    overlap = sum(ngram_overlap(p[d], r[d], n)[0] for d in p.keys() & r.keys())
    n_pred = sum(_ngram_count(t, n) for t in p.values())
    n_ref = sum(_ngram_count(t, n) for t in r.values())
    return prf(overlap, n_pred, n_ref)


def alignment(pred: Timeline, ref: Timeline, stopwords: bool = False) -> list[tuple[int, int]]:
    """Optimal one-to-one date alignment weighted by ROUGE-1 F1 / (1 + day distance)."""
    p, r = _tokens(pred, stopwords), _tokens(ref, stopwords)
    dist = [[date_distance_days(dp, dr) for dr, _ in r] for dp, _ in p]
    weights = [[rouge_f1(tp, tr, 1) / (1 + dist[i][j]) for j, (_, tr) in enumerate(r)]
               for i, (_, tp) in enumerate(p)]
    return max_weight_assignment(weights, dist)


def align_f1(pred: Timeline, ref: Timeline, n: int = 1, stopwords: bool = False) -> float:
    p, r = _tokens(pred, stopwords), _tokens(ref, stopwords)
    overlap = 0.0
    for i, j in alignment(pred, ref, stopwords):
        weight = 1 / (1 + date_distance_days(p[i][0], r[j][0]))
        overlap += weight * ngram_overlap(p[i][1], r[j][1], n)[0]
    n_pred = sum(_ngram_count(t, n) for _, t in p)
    n_ref = sum(_ngram_count(t, n) for _, t in r)
    return prf(overlap, n_pred, n_ref)


def date_f1(pred: Timeline, ref: Timeline) -> float:
    dp = {d for d, _ in date_texts(pred)}
    dr = {d for d, _ in date_texts(ref)}
    shared = len(dp & dr)
    return prf(shared, len(dp), len(dr))


def truncate(pred: TimelineMemory, length: int) -> TimelineMemory:
    """Keep the ``length`` highest-salience entries (earlier date wins ties), in date order."""
    if len(pred) <= length:
        return pred
    keep = sorted(pred.entries, key=lambda e: (-e.salience, e.date))[:length]
    return TimelineMemory(tuple(sorted(keep, key=lambda e: e.date)), pred.revision)


@dataclass
class MetricReport:
    concat_r1: float = 0.0
    concat_r2: float = 0.0
    agree_r1: float = 0.0
    agree_r2: float = 0.0
    align_r1: float = 0.0
    align_r2: float = 0.0
    date_f1: float = 0.0
    reference_count: int = 0
    per_reference: list[dict] = field(default_factory=list)

    def values(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in METRICS}

    def to_dict(self) -> dict:
        return {**self.values(), "reference_count": self.reference_count,
                "per_reference": self.per_reference}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(**{m: float(d[m]) for m in METRICS}, reference_count=int(d["reference_count"]),
                   per_reference=list(d.get("per_reference", [])))

    def table(self) -> str:
        header = ["", *METRICS]
        rows = [[f"ref {i}", *(f"{r[m]:.4f}" for m in METRICS)] for i, r in enumerate(self.per_reference, 1)]
        rows.append(["mean", *(f"{getattr(self, m):.4f}" for m in METRICS)])
        widths = [max(len(str(row[c])) for row in [header, *rows]) for c in range(len(header))]
        lines = ["  ".join(str(cell).rjust(w) for cell, w in zip(row, widths)) for row in [header, *rows]]
        return "\n".join(lines) + "\n"


def score(pred: Timeline, ref: Timeline, stopwords: bool = False) -> dict[str, float]:
    return {
        "concat_r1": concat_f1(pred, ref, 1, stopwords),
        "concat_r2": concat_f1(pred, ref, 2, stopwords),
        "agree_r1": agree_f1(pred, ref, 1, stopwords),
        "agree_r2": agree_f1(pred, ref, 2, stopwords),
        "align_r1": align_f1(pred, ref, 1, stopwords),
        "align_r2": align_f1(pred, ref, 2, stopwords),
        "date_f1": date_f1(pred, ref),
    }


def evaluate(pred: TimelineMemory, refs: Sequence[ReferenceTimeline],
             truncate_to_ref_length: bool = False, stopwords: bool = False) -> MetricReport:
    if not refs:
        raise NoReferences("at least one reference timeline is required")
    per_ref = []
    for ref in refs:
        candidate = truncate(pred, len(ref)) if truncate_to_ref_length else pred
        per_ref.append(score(candidate, ref, stopwords))
    means = {m: statistics.fmean(r[m] for r in per_ref) for m in METRICS}
    return MetricReport(**means, reference_count=len(refs), per_reference=per_ref)


def timeline_from_mapping(mapping: dict[str, str]) -> TimelineMemory:
    """Convenience for tests and ad-hoc scoring: {"YYYY-MM-DD": summary}."""
    entries = sorted((TimelineEntry(parse_date(d), s) for d, s in mapping.items()), key=lambda e: e.date)
    return TimelineMemory(tuple(entries))

