"""Detail Exploration: the marker-driven reasoning loop and the full episode driver."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from . import prompts
from .cognition import EmptyCognition, GlobalCognition
from .dates import format_date
from .llm import BudgetExceeded, Gateway, ModelProfile
from .manifest import RunManifest, Termination
from .model import EpisodeConfig, EventMetadata, GlobalEventMemory, SearchPlan, TimelineMemory
from .retrieval import SearchBackend
from .scraper import EventScraper
from .supervisor import SupervisorThresholds, analyze, make_plan, should_terminate
from .updater import EmptySubTimeline, MergeMode, TimelineUpdater, parse_subtimeline

log = logging.getLogger(__name__)

BEGIN_SEARCH = "<|begin_search_query|>"
END_SEARCH = "<|end_search_query|>"
BEGIN_UPDATE = "<|begin_update_timeline|>"
END_UPDATE = "<|end_update_timeline|>"
BEGIN_RESULT = "<|begin_search_result|>"
END_RESULT = "<|end_search_result|>"
STOP_MARKERS = (END_SEARCH, END_UPDATE)


class MalformedAction(ValueError):
    pass


class ActionKind(str, enum.Enum):
    SEARCH = "search"
    UPDATE_TIMELINE = "update_timeline"
    FINISH = "finish"


@dataclass(frozen=True)
class AgentAction:
    kind: ActionKind
    payload: str = ""


def _payload(text: str, begin: str, end: str) -> str:
    stop = text.rfind(end)
    start = text.rfind(begin, 0, stop)
    if start < 0:
        raise MalformedAction(f"{end} without a matching {begin}")
    return text[start + len(begin):stop].strip()


def detect_action(stream_text: str) -> AgentAction:
    """Action requested at the end of a streamed turn.

    Raises MalformedAction for an unclosed begin marker or an empty search query.
    """
    tail = stream_text.rstrip()
    if tail.endswith(END_SEARCH):
        query = _payload(tail, BEGIN_SEARCH, END_SEARCH)
        if not query:
            raise MalformedAction("empty search query")
        return AgentAction(ActionKind.SEARCH, query)
    if tail.endswith(END_UPDATE):
        return AgentAction(ActionKind.UPDATE_TIMELINE, _payload(tail, BEGIN_UPDATE, END_UPDATE))
    for begin, end in ((BEGIN_SEARCH, END_SEARCH), (BEGIN_UPDATE, END_UPDATE)):
        if tail.rfind(begin) > tail.rfind(end):
            raise MalformedAction(f"{begin} opened but never closed")
    return AgentAction(ActionKind.FINISH)


def render_metadata(meta: EventMetadata) -> str:
    if not meta.events:
        return "(no dated events found)"
    return "\n".join(f"{format_date(e.date)}: {e.description}" for e in meta.events)


@dataclass
class EpisodeState:
    memory: GlobalEventMemory = field(default_factory=GlobalEventMemory)
    timeline: TimelineMemory = field(default_factory=TimelineMemory)
    plan: Optional[SearchPlan] = None


@dataclass
class Backends:
    """Everything an episode talks to. Supervisor and updater calls use the reasoner
    profile unless overridden."""

    gateway: Gateway
    search: SearchBackend
    reasoner: ModelProfile = field(default_factory=ModelProfile.reasoner)
    scraper: ModelProfile = field(default_factory=ModelProfile.scraper)
    supervisor_profile: Optional[ModelProfile] = None
    updater_profile: Optional[ModelProfile] = None
    updater_mode: MergeMode = MergeMode.DETERMINISTIC
    synthesize: bool = True
    plan_with_model: bool = True
    scrape_workers: int = 1
    thresholds: SupervisorThresholds = field(default_factory=SupervisorThresholds)


class Explorer:
    def __init__(self, config: EpisodeConfig, backends: Backends, manifest: RunManifest):
        self.config = config
        self.b = backends
        self.manifest = manifest
        self.gateway = backends.gateway
        self.scraper = EventScraper(backends.search, self.gateway, backends.scraper,
                                    config.chunk_size_words, backends.scrape_workers)
        self.cognition = GlobalCognition(self.gateway, backends.reasoner, config.query,
                                         synthesize=backends.synthesize)
        self.updater = TimelineUpdater(backends.updater_mode, self.gateway,
                                       backends.updater_profile or backends.reasoner, config.query)

    def _record_memory(self, memory: GlobalEventMemory) -> None:
        self.manifest.record("revision", memory="global", revision=memory.revision,
                             synthesis=self.cognition.last_synthesis, state=memory.to_dict())

    def _record_timeline(self, timeline: TimelineMemory) -> None:
        self.manifest.record("revision", memory="timeline", revision=timeline.revision,
                             merge=self.updater.last_status, state=timeline.to_dict())

    def _scrape(self, query: str, k: int, stage: str) -> EventMetadata:
        meta = self.scraper.scrape(query, k)
        self.manifest.record("retrieval", stage=stage, query=query, k=k,
                             hits=[h.doc_id for h in self.scraper.last_hits],
                             events=len(meta.events))
        return meta

    def initialize(self) -> GlobalEventMemory:
        metadata = self._scrape(self.config.query, self.config.n_init, "global")
        if not metadata.events:
            raise EmptyCognition(f"initial scrape for {self.config.query!r} produced no dated events")
        memory = self.cognition.init_from_metadata(metadata)
        self._record_memory(memory)
        return memory

    def _prompt(self, state: EpisodeState) -> str:
        plan = state.plan.render() if state.plan and state.plan.items else "(none yet)"
        return prompts.load("explore").render(
            query=self.config.query,
            memory=state.memory.render() or "(empty)",
            timeline=state.timeline.render().rstrip() or "(empty)",
            plan=plan,
            max_searches=self.config.max_searches_per_iteration,
        )

    def run_iteration(self, state: EpisodeState) -> EpisodeState:
        it = self.manifest.begin_iteration()
        k = it.index
        memory, timeline = state.memory, state.timeline
        messages = [("user", self._prompt(state))]
        reprompted = False
        max_turns = 2 * self.config.max_searches_per_iteration + 4
        for _ in range(max_turns):
            res = self.gateway.stream_until_marker(self.b.reasoner, messages, STOP_MARKERS,
                                                   purpose="explore")
            try:
                action = detect_action(res.text)
            except MalformedAction as exc:
                self.manifest.record("action", kind="malformed", text=res.text, error=str(exc))
                if reprompted:
                    self.manifest.record("action", kind="finish", forced=True, text="")
                    break
                reprompted = True
                messages += [("assistant", res.text),
                             ("user", prompts.load("protocol_reminder").render())]
                continue

            if action.kind is ActionKind.FINISH:
                self.manifest.record("action", kind="finish", forced=False, text=res.text)
                break

            if action.kind is ActionKind.SEARCH:
                if it.searches >= self.config.max_searches_per_iteration:
                    self.manifest.record("action", kind="search_refused", query=action.payload,
                                         text=res.text)
                    self.manifest.record("action", kind="finish", forced=True, text="")
                    break
                it.searches += 1
                meta = self._scrape(action.payload, self.config.n_exp, "exploration")
                memory = self.cognition.update_memory(memory, meta)
                injected = f"{BEGIN_RESULT}\n{render_metadata(meta)}\n{END_RESULT}"
                self.manifest.record("action", kind="search", query=action.payload, text=res.text,
                                     result=injected)
                self._record_memory(memory)
                messages += [("assistant", res.text), ("user", injected)]
                continue

            try:
                sub = parse_subtimeline(action.payload)
            except EmptySubTimeline as exc:
                self.manifest.record("action", kind="update_rejected", body=action.payload,
                                     text=res.text, error=str(exc))
                messages += [("assistant", res.text),
                             ("user", "Update rejected: no line started with a YYYY-MM-DD date.")]
                continue
            timeline = self.updater.merge(timeline, sub, memory, k)
            it.updates += 1
            self.manifest.record("action", kind="update", body=action.payload, text=res.text,
                                 entries=len(sub))
            self._record_timeline(timeline)
            messages += [("assistant", res.text),
                         ("user", f"Timeline updated; it now has {len(timeline)} entries.")]
        else:
            self.manifest.record("action", kind="finish", forced=True, text="")
        self.manifest.end_iteration()
        return replace(state, memory=memory, timeline=timeline)

    def review(self, state: EpisodeState) -> SearchPlan:
        deficiencies = analyze(state.timeline, state.memory, self.b.thresholds)
        gateway = self.gateway if self.b.plan_with_model else None
        plan = make_plan(deficiencies, self.config.query, gateway,
                         self.b.supervisor_profile or self.b.reasoner)
        it = self.manifest.iterations[-1]
        it.deficiencies = [d.to_dict() for d in deficiencies]
        it.plan = plan.to_dict()
        self.manifest.record("plan", deficiencies=it.deficiencies, plan=it.plan)
        return plan

    def run(self) -> tuple[EpisodeState, Termination]:
        state = EpisodeState()
        try:
            state.memory = self.initialize()
            while True:
                state = self.run_iteration(state)
                state.plan = self.review(state)
                if should_terminate(state.plan, self.manifest.current_iteration, self.config):
                    if state.plan.items:
                        return state, Termination.MAX_ITERATIONS
                    return state, Termination.SUPERVISOR_TERMINATE
        except BudgetExceeded as exc:
            log.info("budget exhausted: %s", exc)
            self.manifest.record("budget", detail=str(exc))
            return state, Termination.BUDGET_EXCEEDED
        except EmptyCognition as exc:
            log.warning("%s", exc)
            self.manifest.record("diagnostic", detail=str(exc))
            return state, Termination.EMPTY_COGNITION


def run_episode(config: EpisodeConfig, backends: Backends) -> tuple[TimelineMemory, RunManifest]:
    """Global Cognition, then Detail Exploration iterations until the supervisor has no
    deficiencies left, the iteration cap is hit, or the token budget runs out."""
    manifest = RunManifest(config, "agentic",
                           models={"reasoner": backends.reasoner.to_dict(),
                                   "scraper": backends.scraper.to_dict()},
                           updater_mode=backends.updater_mode.value)
    gateway = backends.gateway
    gateway.token_budget = config.token_budget
    gateway.seed = config.seed
    listener = lambda event: manifest.record("call", **event)  # noqa: E731
    gateway.listeners.append(listener)
    explorer = Explorer(config, backends, manifest)
    try:
        state, reason = explorer.run()
    finally:
        gateway.listeners.remove(listener)
    manifest.finish(reason, gateway.ledger.usage, timeline_entries=len(state.timeline),
                    memory_events=len(state.memory), scrape=explorer.scraper.stats.to_dict())
    return state.timeline, manifest
