"""Human-readable views of run manifests: episode transcripts and cross-run tables."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Iterable

from .manifest import read_records

METHOD_LABELS = {
    "agentic": "AGENTIC",
    "direct": "DIRECT",
    "rewrite": "REWRITE",
    "iter_rag": "ITER_RAG",
}


def render_transcript(records: list[dict]) -> str:
    out: list[str] = []
    for r in records:
        t = r["type"]
        if t == "header":
            out.append(f"Query: {r['config']['query']}")
            out.append(f"Method: {METHOD_LABELS.get(r['method'], r['method'])}")
        elif t == "retrieval":
            where = f" round {r['round']}" if "round" in r else ""
            out.append(f"[retrieval{where}] {r['query']!r}: {len(r['hits'])} documents"
                       + (f", {r['events']} dated events" if "events" in r else ""))
        elif t == "revision" and r["memory"] == "global":
            out.append(f"[global event memory, revision {r['revision']}, "
                       f"{len(r['state']['events'])} events, synthesis {r['synthesis']}]")
            if r["iteration"] == 0:
                out.extend(f"  {e['date']}: {e['description']}" for e in r["state"]["events"])
        elif t == "revision" and r["memory"] == "timeline":
            out.append(f"[timeline memory, revision {r['revision']}, "
                       f"{len(r['state']['entries'])} entries]")
        elif t == "iteration_start":
            out.append("")
            out.append(f"=== Iteration {r['iteration']} ===")
        elif t == "action":
            kind = r["kind"]
            if r.get("text"):
                out.append(r["text"].strip())
            if kind == "search":
                out.append("  (Here call Event Scraper)")
                out.append(r["result"])
            elif kind == "update":
                out.append(f"  (Here call Timeline Updater: {r['entries']} dated lines)")
            elif kind == "update_rejected":
                out.append(f"  (update rejected: {r['error']})")
            elif kind == "malformed":
                out.append(f"  (malformed action: {r['error']}; protocol reminder sent)")
            elif kind == "search_refused":
                out.append("  (search limit reached; iteration ends)")
            elif kind == "finish" and r.get("forced"):
                out.append("  (iteration ended by the orchestrator)")
        elif t == "plan":
            plan = r["plan"]
            if plan["verdict"] == "Terminate":
                out.append("Supervisor: no deficiencies remain; terminating.")
            else:
                out.append(f"Supervisor: {len(r['deficiencies'])} deficiencies; search plan ({plan['source']}):")
                for item in plan["items"]:
                    d = item["deficiency"]
                    out.append(f"  - {d['kind']} {d.get('anchor', '')} {d['note']}".rstrip())
                    out.extend(f"      search: {q}" for q in item["queries"])
        elif t == "generation":
            out.append(f"[generation: {r['chars']} characters]")
        elif t == "rewrite":
            out.append("[query variants] " + "; ".join(r["variants"]))
        elif t in ("budget", "diagnostic"):
            out.append(f"[{t}] {r['detail']}")
        elif t == "termination":
            u = r["usage"]
            out.append("")
            out.append(f"Terminated: {r['reason']} after {r['iterations']} iterations; "
                       f"{u['total_tokens']} tokens over {u['call_count']} model calls")
    return "\n".join(out) + "\n"


def load_run(run_dir: str | os.PathLike) -> dict:
    run = Path(run_dir)
    records = read_records(run / "manifest.jsonl")
    metrics_path = run / "metrics.json"
    if not metrics_path.is_file():
        raise FileNotFoundError(f"{metrics_path} missing")
    metrics = json.loads(metrics_path.read_text(encoding="utf-8"))
    termination = next(r for r in records if r["type"] == "termination")
    return {
        "run": run.name,
        "method": METHOD_LABELS.get(records[0]["method"], records[0]["method"]),
        "tokens": termination["usage"]["total_tokens"],
        "align_r2": metrics["align_r2"],
        "date_f1": metrics["date_f1"],
    }


def _fmt_tokens(n: int) -> str:
    if n >= 1_000_000:
        return f"~{n / 1e6:.1f}M"
    if n >= 1_000:
        return f"~{n / 1e3:.1f}K"
    return str(n)


def comparison_table(rows: Iterable[dict]) -> str:
    """Method x {tokens, Align R-2, Date F1}, methods as columns."""
    rows = list(rows)
    header = ["Method", *(r["method"] for r in rows)]
    body = [
        ["Token", *(_fmt_tokens(r["tokens"]) for r in rows)],
        ["Align R-2", *(f"{r['align_r2']:.4f}" for r in rows)],
        ["Date F1", *(f"{r['date_f1']:.4f}" for r in rows)],
    ]
    widths = [max(len(row[c]) for row in [header, *body]) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(w) if c == 0 else cell.rjust(w)
                       for c, (cell, w) in enumerate(zip(row, widths)))
             for row in [header, *body]]
    return "\n".join(lines) + "\n"
