"""Run the engine and the three baselines on one topic and print the cost/quality table."""

from __future__ import annotations

import argparse
from pathlib import Path

from tlsum import runs
from tlsum.evaluation import load_references
from tlsum.reporting import comparison_table, load_run

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
METHODS = ("agentic", "direct", "rewrite", "iter_rag")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/compare")
    ap.add_argument("--config", default=str(FIXTURES / "apple_config.json"))
    ap.add_argument("--corpus", default=str(FIXTURES / "apple_corpus.jsonl"))
    ap.add_argument("--scenario", default=str(FIXTURES / "apple_scenario.json"))
    ap.add_argument("--refs", default=str(FIXTURES / "apple_refs.json"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    opts = runs.BackendOptions(scenario=args.scenario or None, corpus=args.corpus)
    config = runs.load_config(args.config, seed=args.seed)
    refs = load_references(args.refs)
    out = Path(args.out)
    for method in METHODS:
        runs.execute(config, opts, out / method, method, refs)
    print(comparison_table(load_run(out / m) for m in METHODS), end="")


if __name__ == "__main__":
    main()
