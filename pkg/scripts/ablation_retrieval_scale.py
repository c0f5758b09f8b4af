"""Retrieval-scale ablation: sweep n_init with n_exp fixed at 20, then n_exp with n_init fixed.

Runs offline against the shipped Apple fixtures by default; pass --corpus/--scenario
(or unset --scenario and export LLM_ENDPOINT) to point it at other backends.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from tlsum import runs
from tlsum.evaluation import load_references
from tlsum.manifest import read_records

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
VALUES = (10, 20, 30, 40)
FIXED = 20


def sweep_points(values=VALUES, fixed=FIXED):
    for v in values:
        yield f"n_init_{v}", {"n_init": v, "n_exp": fixed}
    for v in values:
        yield f"n_exp_{v}", {"n_init": fixed, "n_exp": v}


def run_sweep(out_root: Path, config_path: str, opts: runs.BackendOptions, refs_path: str | None):
    refs = load_references(refs_path) if refs_path else None
    rows = []
    for name, overrides in sweep_points():
        config = runs.load_config(config_path, **overrides)
        _, manifest = runs.execute(config, opts, out_root / name, refs=refs)
        header = read_records(out_root / name / runs.MANIFEST)[0]
        row = {"run": name, **{k: header["config"][k] for k in ("n_init", "n_exp")},
               "termination": manifest.termination.value, "tokens": manifest.usage.total}
        if refs:
            metrics = json.loads((out_root / name / runs.METRICS).read_text())
            row.update(align_r2=metrics["align_r2"], date_f1=metrics["date_f1"])
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/ablation")
    ap.add_argument("--config", default=str(FIXTURES / "apple_config.json"))
    ap.add_argument("--corpus", default=str(FIXTURES / "apple_corpus.jsonl"))
    ap.add_argument("--scenario", default=str(FIXTURES / "apple_scenario.json"))
    ap.add_argument("--refs", default=str(FIXTURES / "apple_refs.json"))
    args = ap.parse_args(argv)

    opts = runs.BackendOptions(scenario=args.scenario or None, corpus=args.corpus)
    rows = run_sweep(Path(args.out), args.config, opts, args.refs or None)
    cols = list(rows[0])
    print("  ".join(f"{c:>11}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>11.4f}" if isinstance(r[c], float) else f"{r[c]!s:>11}" for c in cols))


if __name__ == "__main__":
    main()
