"""Run manifest: an append-only JSON Lines record of one episode or baseline run."""

from __future__ import annotations

import datetime as dt
import enum
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import prompts
from .llm import TokenUsage
from .model import EpisodeConfig

# keys holding wall-clock values; excluded when comparing runs
VOLATILE_KEYS = frozenset({"wall_clock"})


class Termination(str, enum.Enum):
    SUPERVISOR_TERMINATE = "SupervisorTerminate"
    MAX_ITERATIONS = "MaxIterations"
    BUDGET_EXCEEDED = "BudgetExceeded"
    EMPTY_COGNITION = "EmptyCognition"
    COMPLETED = "Completed"


class CorruptManifest(ValueError):
    pass


@dataclass
class IterationRecord:
    index: int
    searches: int = 0
    updates: int = 0
    barren: bool = False
    deficiencies: list[dict] = field(default_factory=list)
    plan: Optional[dict] = None


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


class RunManifest:
    def __init__(self, config: EpisodeConfig, method: str = "agentic", **meta: Any):
        self.config = config
        self.method = method
        self.records: list[dict] = []
        self.iterations: list[IterationRecord] = []
        self.termination: Optional[Termination] = None
        self.usage = TokenUsage()
        self.record("header", method=method, config=config.to_dict(),
                    prompt_versions=prompts.versions(), wall_clock=_now(), **meta)

    @property
    def current_iteration(self) -> int:
        return self.iterations[-1].index if self.iterations else 0

    def record(self, type_: str, **fields: Any) -> dict:
        rec = {"seq": len(self.records), "type": type_, "iteration": self.current_iteration, **fields}
        self.records.append(rec)
        return rec

    def begin_iteration(self) -> IterationRecord:
        it = IterationRecord(len(self.iterations) + 1)
        self.iterations.append(it)
        self.record("iteration_start")
        return it

    def end_iteration(self) -> None:
        it = self.iterations[-1]
        it.barren = it.updates == 0
        self.record("iteration_end", searches=it.searches, updates=it.updates, barren=it.barren)

    def finish(self, reason: Termination, usage: TokenUsage, **extra: Any) -> None:
        if self.termination is not None:
            raise RuntimeError("manifest already finished")
        self.termination = Termination(reason)
        self.usage = usage
        self.record("termination", reason=self.termination.value, usage=usage.to_dict(),
                    iterations=len(self.iterations), wall_clock=_now(), **extra)

    def count(self, type_: str, **match: Any) -> int:
        return sum(1 for r in self.records
                   if r["type"] == type_ and all(r.get(k) == v for k, v in match.items()))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in self.records)

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


def read_records(path: str | os.PathLike) -> list[dict]:
    records = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if line.strip():
                    records.append(json.loads(line))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptManifest(f"{path}: {exc}") from None
    if not records or records[0].get("type") != "header":
        raise CorruptManifest(f"{path}: missing header record")
    if sum(1 for r in records if r.get("type") == "termination") != 1:
        raise CorruptManifest(f"{path}: expected exactly one termination record")
    return records


def strip_volatile(record: Any) -> Any:
    if isinstance(record, dict):
        return {k: strip_volatile(v) for k, v in record.items() if k not in VOLATILE_KEYS}
    if isinstance(record, list):
        return [strip_volatile(v) for v in record]
    return record


def comparable(path: str | os.PathLike) -> str:
    """Manifest text with wall-clock fields removed, for byte comparison across runs."""
    return "".join(json.dumps(strip_volatile(r), sort_keys=True, ensure_ascii=False) + "\n"
                   for r in read_records(path))
