"""Regenerate the frozen golden-episode outputs used by the determinism check.

Run after any intentional change to prompts, the scenario, or the engine.
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from tlsum import runs
from tlsum.manifest import comparable

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    opts = runs.BackendOptions(scenario=str(FIXTURES / "apple_scenario.json"),
                               corpus=str(FIXTURES / "apple_corpus.jsonl"))
    config = runs.load_config(str(FIXTURES / "apple_config.json"))
    golden = FIXTURES / "golden"
    golden.mkdir(exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        runs.execute(config, opts, tmp)
        shutil.copy(Path(tmp) / runs.TIMELINE_JSON, golden / "timeline.json")
        (golden / "manifest.comparable.jsonl").write_text(comparable(Path(tmp) / runs.MANIFEST),
                                                          encoding="utf-8")
    print(f"wrote {golden}")


if __name__ == "__main__":
    main()
