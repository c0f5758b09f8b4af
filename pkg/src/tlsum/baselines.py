"""Retrieval-then-generate baselines: DIRECT, REWRITE and ITER_RAG."""

from __future__ import annotations

import enum
import logging

from . import prompts
from .dates import format_date
from .llm import BudgetExceeded, Gateway, ModelProfile
from .manifest import RunManifest, Termination
from .model import EpisodeConfig, TimelineMemory
from .retrieval import Document, EmptyBody, FetchError, SearchBackend, snippet_document
from .scraper import parse_json_array
from .updater import EmptySubTimeline, parse_subtimeline

log = logging.getLogger(__name__)

ITER_RAG_ROUNDS = 5
MAX_VARIANTS = 3
CONTEXT_WORDS = 12000


class BaselineKind(str, enum.Enum):
    DIRECT = "direct"
    REWRITE = "rewrite"
    ITER_RAG = "iter_rag"


class _Runner:
    def __init__(self, kind: BaselineKind, config: EpisodeConfig, gateway: Gateway,
                 search: SearchBackend, profile: ModelProfile):
        self.kind = kind
        self.config = config
        self.gateway = gateway
        self.search = search
        self.profile = profile
        self.manifest = RunManifest(config, kind.value, models={"reasoner": profile.to_dict()})
        self.timeline = TimelineMemory()

    def retrieve(self, query: str, round_: int) -> list[Document]:
        hits = self.search.search(query, self.config.top_k)
        docs = []
        for hit in hits:
            try:
                docs.append(self.search.fetch(hit))
            except EmptyBody:
                continue
            except FetchError:
                docs.append(snippet_document(hit))
        self.manifest.record("retrieval", stage="baseline", round=round_, query=query,
                             k=self.config.top_k, hits=[h.doc_id for h in hits])
        return docs

    def generate(self, docs: list[Document]) -> TimelineMemory:
        per_doc = max(50, CONTEXT_WORDS // max(len(docs), 1))
        rendered = "\n\n".join(
            f"[{i}] {d.title} ({format_date(d.published) if d.published else 'undated'})\n"
            + " ".join(d.body.split()[:per_doc])
            for i, d in enumerate(docs, 1))
        prompt = prompts.load("generate").render(
            query=self.config.query, timeline=self.timeline.render().rstrip() or "(empty)",
            documents=rendered or "(no documents)")
        text, _ = self.gateway.complete(self.profile, [("user", prompt)], purpose="generate")
        self.manifest.record("generation", chars=len(text))
        try:
            sub = parse_subtimeline(text)
        except EmptySubTimeline:
            log.info("generation produced no dated lines; keeping previous timeline")
            return self.timeline
        return TimelineMemory(sub.entries, self.timeline.revision + 1)

    def rewrite_variants(self) -> list[str]:
        prompt = prompts.load("rewrite").render(query=self.config.query)
        text, _ = self.gateway.complete(self.profile, [("user", prompt)], purpose="rewrite")
        items = parse_json_array(text)
        if items is None:
            items = [line.strip(" -*\t") for line in text.splitlines()]
        variants = list(dict.fromkeys(q.strip() for q in items if isinstance(q, str) and q.strip()))
        variants = variants[:MAX_VARIANTS]
        if len(variants) < 2 and self.config.query not in variants:
            variants.append(self.config.query)
        self.manifest.record("rewrite", variants=variants)
        return variants

    def refine_query(self) -> str:
        prompt = prompts.load("refine_query").render(
            query=self.config.query, timeline=self.timeline.render().rstrip() or "(empty)")
        text, _ = self.gateway.complete(self.profile, [("user", prompt)], purpose="refine_query")
        lines = [ln.strip().strip('"') for ln in text.splitlines() if ln.strip()]
        return lines[0] if lines else self.config.query

    def run(self) -> None:
        if self.kind is BaselineKind.DIRECT:
            self.timeline = self.generate(self.retrieve(self.config.query, 1))
        elif self.kind is BaselineKind.REWRITE:
            pooled: dict[str, Document] = {}
            for i, variant in enumerate(self.rewrite_variants(), 1):
                for d in self.retrieve(variant, i):
                    pooled.setdefault(d.doc_id, d)
            # same document count as the other methods
            self.timeline = self.generate(list(pooled.values())[:self.config.top_k])
        else:
            for round_ in range(1, ITER_RAG_ROUNDS + 1):
                query = self.config.query if round_ == 1 else self.refine_query()
                self.timeline = self.generate(self.retrieve(query, round_))


def run_baseline(kind: BaselineKind | str, config: EpisodeConfig, gateway: Gateway,
                 search: SearchBackend, profile: ModelProfile | None = None
                 ) -> tuple[TimelineMemory, RunManifest]:
    kind = BaselineKind(kind)
    runner = _Runner(kind, config, gateway, search, profile or ModelProfile.reasoner())
    gateway.token_budget = config.token_budget
    gateway.seed = config.seed
    listener = lambda event: runner.manifest.record("call", **event)  # noqa: E731
    gateway.listeners.append(listener)
    reason = Termination.COMPLETED
    try:
        runner.run()
    except BudgetExceeded as exc:
        runner.manifest.record("budget", detail=str(exc))
        reason = Termination.BUDGET_EXCEEDED
    finally:
        gateway.listeners.remove(listener)
    runner.manifest.finish(reason, gateway.ledger.usage, timeline_entries=len(runner.timeline))
    return runner.timeline, runner.manifest
