"""Run directories and backend wiring shared by the CLI and the experiment scripts."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .baselines import BaselineKind, run_baseline
from .cache import DiskCache
from .evaluation import MetricReport, ReferenceTimeline, evaluate
from .llm import Gateway, HttpChatBackend, ModelProfile, ScriptedResponder
from .manifest import RunManifest
from .model import EpisodeConfig, TimelineMemory, timeline_to_json, timeline_to_text
from .orchestrator import Backends, run_episode
from .retrieval import LocalSearch, RemoteSearch
from .updater import MergeMode

TIMELINE_TXT = "timeline.txt"
TIMELINE_JSON = "timeline.json"
MANIFEST = "manifest.jsonl"
METRICS = "metrics.json"


class ConfigError(ValueError):
    pass


@dataclass
class BackendOptions:
    scenario: Optional[str] = None
    llm_endpoint: Optional[str] = None
    corpus: Optional[str] = None
    index: Optional[str] = None
    search_endpoint: Optional[str] = None
    cache_dir: Optional[str] = None
    reasoner_model: str = "QwQ-32B"
    scraper_model: str = "Qwen2.5-32B-Instruct"
    temperature: Optional[float] = None
    updater_mode: str = "auto"
    synthesize: bool = True
    workers: Optional[int] = None
    retry_backoff: float = 2.0

    @property
    def scripted(self) -> bool:
        return self.scenario is not None


def load_config(path: Optional[str], **overrides) -> EpisodeConfig:
    """Flags override the config file, which overrides built-in defaults."""
    values: dict = {}
    if path:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "query" not in values:
        raise ConfigError("no query given (use --query or a config file)")
    try:
        return EpisodeConfig.from_dict(values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def build_search(opts: BackendOptions):
    if opts.index:
        return LocalSearch.load(opts.index)
    if opts.corpus:
        return LocalSearch.from_jsonl(opts.corpus)
    if opts.search_endpoint:
        if not os.environ.get("SEARCH_API_KEY"):
            raise ConfigError("SEARCH_API_KEY is not set")
        cache_root = Path(opts.cache_dir or ".cache") / "search"
        return RemoteSearch(opts.search_endpoint, cache=DiskCache(cache_root))
    raise ConfigError("no search backend: give --corpus, --index or --search-endpoint")


def build_gateway(opts: BackendOptions) -> Gateway:
    if opts.scenario:
        if not Path(opts.scenario).is_file():
            raise ConfigError(f"scenario file {opts.scenario} not found")
        backend = ScriptedResponder.from_file(opts.scenario)
    else:
        endpoint = opts.llm_endpoint or os.environ.get("LLM_ENDPOINT")
        if not endpoint:
            raise ConfigError("no model endpoint: pass --llm-endpoint, set LLM_ENDPOINT or pass --scenario")
        backend = HttpChatBackend(endpoint)
    cache = DiskCache(Path(opts.cache_dir) / "llm") if opts.cache_dir else None
    return Gateway(backend, cache=cache, retry_backoff=opts.retry_backoff)


def _profiles(opts: BackendOptions) -> tuple[ModelProfile, ModelProfile]:
    extra = {} if opts.temperature is None else {"temperature": opts.temperature}
    return ModelProfile.reasoner(opts.reasoner_model, **extra), ModelProfile.scraper(opts.scraper_model, **extra)


def build_backends(opts: BackendOptions) -> Backends:
    search = build_search(opts)
    gateway = build_gateway(opts)
    reasoner, scraper = _profiles(opts)
    mode = opts.updater_mode
    if mode == "auto":
        mode = "deterministic" if opts.scripted else "assisted"
    workers = opts.workers if opts.workers is not None else (1 if opts.scripted else 8)
    return Backends(gateway=gateway, search=search, reasoner=reasoner, scraper=scraper,
                    updater_mode=MergeMode(mode), synthesize=opts.synthesize,
                    scrape_workers=workers)


def write_run(out_dir: str | os.PathLike, query: str, timeline: TimelineMemory,
              manifest: RunManifest, report: MetricReport | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / TIMELINE_TXT).write_text(timeline_to_text(timeline), encoding="utf-8")
    (out / TIMELINE_JSON).write_text(timeline_to_json(timeline, query), encoding="utf-8")
    manifest.write(out / MANIFEST)
    if report is not None:
        write_metrics(out, report)
    return out


def write_metrics(out_dir: str | os.PathLike, report: MetricReport) -> None:
    path = Path(out_dir) / METRICS
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


def execute(config: EpisodeConfig, opts: BackendOptions, out_dir: str | os.PathLike,
            method: str = "agentic",
            refs: Sequence[ReferenceTimeline] | None = None,
            truncate_to_ref: bool = True) -> tuple[TimelineMemory, RunManifest]:
    """Run the engine or one baseline and write its run directory."""
    if method == "agentic":
        timeline, manifest = run_episode(config, build_backends(opts))
    else:
        reasoner, _ = _profiles(opts)
        timeline, manifest = run_baseline(BaselineKind(method), config, build_gateway(opts),
                                          build_search(opts), reasoner)
    report = evaluate(timeline, refs, truncate_to_ref) if refs else None
    write_run(out_dir, config.query, timeline, manifest, report)
    return timeline, manifest
