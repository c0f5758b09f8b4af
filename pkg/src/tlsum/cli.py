"""Command line: index, run, baseline, eval, replay, report."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import runs
from .evaluation import evaluate, load_references
from .manifest import CorruptManifest, read_records
from .model import timeline_from_json
from .reporting import comparison_table, load_run, render_transcript
from .retrieval import LocalSearch, RetrievalError


def _fail(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def episode_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON episode config."),
        click.option("--query", help="Topic query (overrides the config file)."),
        click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Run directory."),
        click.option("--scenario", type=click.Path(dir_okay=False), help="Scripted model scenario (offline mode)."),
        click.option("--corpus", type=click.Path(dir_okay=False), help="JSON Lines corpus for closed-domain search."),
        click.option("--index", "index_path", type=click.Path(dir_okay=False), help="Index written by `index`."),
        click.option("--llm-endpoint", help="Chat-completion endpoint (default LLM_ENDPOINT; key from LLM_API_KEY)."),
        click.option("--search-endpoint", help="Web search API endpoint (key from SEARCH_API_KEY)."),
        click.option("--cache-dir", type=click.Path(file_okay=False), help="Response cache directory."),
        click.option("--refs", type=click.Path(dir_okay=False), help="Reference timelines; writes metrics.json."),
        click.option("--truncate-to-ref/--no-truncate-to-ref", default=True,
                     help="Truncate to reference length before scoring."),
        click.option("--n-init", type=int), click.option("--n-exp", type=int),
        click.option("--top-k", type=int), click.option("--max-iterations", type=int),
        click.option("--max-searches", type=int), click.option("--token-budget", type=int),
        click.option("--chunk-size", type=int), click.option("--seed", type=int),
        click.option("--reasoner-model", default="QwQ-32B", show_default=True),
        click.option("--scraper-model", default="Qwen2.5-32B-Instruct", show_default=True),
        click.option("--temperature", type=float, help="Override the default 0.7."),
        click.option("--updater-mode", type=click.Choice(["auto", "deterministic", "assisted"]), default="auto"),
        click.option("--synthesis/--no-synthesis", default=True, help="Model rewrite pass over global memory."),
        click.option("--workers", type=int, help="Parallel fetch/extraction calls (default 8 live, 1 scripted)."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _execute(method: str, kw: dict) -> None:
    try:
        config = runs.load_config(
            kw["config_path"], query=kw["query"], n_init=kw["n_init"], n_exp=kw["n_exp"],
            top_k=kw["top_k"], max_iterations=kw["max_iterations"],
            max_searches_per_iteration=kw["max_searches"], token_budget=kw["token_budget"],
            chunk_size_words=kw["chunk_size"], seed=kw["seed"])
        opts = runs.BackendOptions(
            scenario=kw["scenario"], llm_endpoint=kw["llm_endpoint"], corpus=kw["corpus"], index=kw["index_path"],
            search_endpoint=kw["search_endpoint"], cache_dir=kw["cache_dir"],
            reasoner_model=kw["reasoner_model"], scraper_model=kw["scraper_model"],
            temperature=kw["temperature"], updater_mode=kw["updater_mode"],
            synthesize=kw["synthesis"], workers=kw["workers"])
        refs = load_references(kw["refs"]) if kw["refs"] else None
        # resolve backends up front so configuration errors surface before any call
        runs.build_search(opts)
        runs.build_gateway(opts)
    except (runs.ConfigError, RetrievalError, OSError, ValueError, KeyError) as exc:
        _fail(str(exc))
    timeline, manifest = runs.execute(config, opts, kw["out_dir"], method, refs, kw["truncate_to_ref"])
    u = manifest.usage
    click.echo(f"termination: {manifest.termination.value}")
    click.echo(f"timeline entries: {len(timeline)}")
    click.echo(f"tokens: prompt={u.prompt_tokens} completion={u.completion_tokens} "
               f"total={u.total} calls={u.call_count}")
    click.echo(f"wrote {kw['out_dir']}")
    if manifest.termination.value == "EmptyCognition":
        sys.exit(3)


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool):
    """Timeline construction with reasoning-guided retrieval."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("index")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("index_path", type=click.Path(dir_okay=False))
def cmd_index(corpus_path: str, index_path: str):
    """Build a BM25 index over a JSON Lines corpus."""
    try:
        search = LocalSearch.from_jsonl(corpus_path)
    except RetrievalError as exc:
        _fail(f"{type(exc).__name__}: {exc}", 1)
    search.save(index_path)
    click.echo(f"documents: {search.index.doc_count}")
    click.echo(f"vocabulary: {search.index.vocabulary_size}")


@main.command("run")
@episode_options
def cmd_run(**kw):
    """Run a full episode: global cognition, then detail exploration."""
    _execute("agentic", kw)


@main.command("baseline")
@click.argument("kind", type=click.Choice(["direct", "rewrite", "iter_rag"]))
@episode_options
def cmd_baseline(kind: str, **kw):
    """Run one of the retrieve-then-generate baselines."""
    _execute(kind, kw)


@main.command("eval")
@click.argument("pred_path", type=click.Path(exists=True))
@click.argument("refs_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--truncate-to-ref/--no-truncate-to-ref", default=False)
@click.option("--stopwords", is_flag=True, help="Drop stopwords before scoring.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write metrics JSON here.")
def cmd_eval(pred_path: str, refs_path: str, truncate_to_ref: bool, stopwords: bool, out_path: str | None):
    """Score a timeline (timeline.json or a run directory) against references."""
    pred = Path(pred_path)
    if pred.is_dir():
        pred = pred / runs.TIMELINE_JSON
    try:
        _, timeline = timeline_from_json(pred.read_text(encoding="utf-8"))
        refs = load_references(refs_path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        _fail(f"cannot parse inputs: {exc}", 1)
    report = evaluate(timeline, refs, truncate_to_ref, stopwords)
    click.echo(report.table(), nl=False)
    if out_path:
        Path(out_path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    elif Path(pred_path).is_dir():
        runs.write_metrics(pred_path, report)


@main.command("replay")
@click.argument("manifest_path", type=click.Path(exists=True))
def cmd_replay(manifest_path: str):
    """Print an episode transcript from its manifest."""
    path = Path(manifest_path)
    if path.is_dir():
        path = path / runs.MANIFEST
    try:
        records = read_records(path)
        text = render_transcript(records)
    except (CorruptManifest, KeyError, TypeError) as exc:
        _fail(f"corrupt manifest: {exc}", 1)
    click.echo(text, nl=False)


@main.command("report")
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(file_okay=False))
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
def cmd_report(run_dirs: tuple[str, ...], out_path: str | None):
    """Token cost vs. Align R-2 and Date F1 across runs."""
    try:
        rows = [load_run(d) for d in run_dirs]
    except (OSError, CorruptManifest, KeyError, StopIteration) as exc:
        _fail(f"missing or unreadable run inputs: {exc}", 1)
    table = comparison_table(rows)
    click.echo(table, nl=False)
    if out_path:
        Path(out_path).write_text(table, encoding="utf-8")


if __name__ == "__main__":
    main()
