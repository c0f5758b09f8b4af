"""Named prompt templates shipped as text assets under ``prompts/``."""

from __future__ import annotations

import functools
import hashlib
import string
from dataclasses import dataclass
from importlib import resources


class MissingPlaceholder(KeyError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    @property
    def placeholders(self) -> set[str]:
        found = set()
        for _, named, braced, _ in string.Template.pattern.findall(self.body):
            if named or braced:
                found.add(named or braced)
        return found

    @property
    def version(self) -> str:
        return hashlib.sha256(self.body.encode("utf-8")).hexdigest()[:12]

    def render(self, **values) -> str:
        missing = self.placeholders - values.keys()
        if missing:
            raise MissingPlaceholder(f"{self.name}: no value for {sorted(missing)}")
        return string.Template(self.body).substitute({k: str(v) for k, v in values.items()})


NAMES = (
    "extract", "extract_repair", "synthesize", "explore", "protocol_reminder",
    "update", "plan", "generate", "rewrite", "refine_query",
)


@functools.lru_cache(maxsize=None)
def load(name: str) -> PromptTemplate:
    body = resources.files(__package__).joinpath("prompts", f"{name}.txt").read_text(encoding="utf-8")
    return PromptTemplate(name, body)


def versions() -> dict[str, str]:
    return {name: load(name).version for name in NAMES}
