import json

import pytest
from click.testing import CliRunner

from conftest import CONFIG, CORPUS, REFS, SCENARIO
from tlsum.cli import main
from tlsum.manifest import comparable

SCRIPTED = ["--config", str(CONFIG), "--scenario", str(SCENARIO), "--corpus", str(CORPUS)]


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


@pytest.fixture(scope="module")
def golden(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden")
    res = invoke("run", *SCRIPTED, "--refs", REFS, "--out", out)
    assert res.exit_code == 0, res.output
    return out, res.output


def test_index(tmp_path):
    res = invoke("index", CORPUS, tmp_path / "idx.json")
    assert res.exit_code == 0
    assert "documents: 8" in res.output and "vocabulary:" in res.output
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
    res = invoke("index", bad, tmp_path / "idx2.json")
    assert res.exit_code != 0 and "DuplicateDocId" in res.output


def test_run_writes_all_artifacts(golden):
    out, output = golden
    assert "termination: SupervisorTerminate" in output
    assert "tokens: prompt=" in output
    for name in ("timeline.txt", "timeline.json", "manifest.jsonl", "metrics.json"):
        assert (out / name).is_file()
    tl = json.loads((out / "timeline.json").read_text())
    assert tl["query"] == "Apple Inc. history" and len(tl["entries"]) == 8
    assert (out / "timeline.txt").read_text().splitlines()[0].startswith("1976-04-01: ")


def test_run_from_index_matches_corpus_run(golden, tmp_path):
    invoke("index", CORPUS, tmp_path / "idx.json")
    args = ["--config", CONFIG, "--scenario", SCENARIO, "--index", tmp_path / "idx.json"]
    res = invoke("run", *args, "--out", tmp_path / "r")
    assert res.exit_code == 0
    assert (tmp_path / "r" / "timeline.json").read_bytes() == (golden[0] / "timeline.json").read_bytes()


def test_flags_override_config(tmp_path):
    res = invoke("run", *SCRIPTED, "--n-init", 30, "--seed", 4, "--out", tmp_path)
    assert res.exit_code == 0
    header = json.loads((tmp_path / "manifest.jsonl").read_text().splitlines()[0])
    assert header["config"]["n_init"] == 30 and header["config"]["seed"] == 4
    assert header["config"]["n_exp"] == 2


@pytest.mark.parametrize("args", [
    ["--query", "x", "--corpus", str(CORPUS)],                       # no model endpoint
    ["--query", "x", "--scenario", str(SCENARIO)],                   # no search backend
    ["--corpus", str(CORPUS), "--scenario", str(SCENARIO)],          # no query
    [*SCRIPTED, "--n-init", "0"],                                    # invalid config
    ["--query", "x", "--scenario", "missing.json", "--corpus", str(CORPUS)],
])
def test_configuration_errors_exit_before_running(args, tmp_path, monkeypatch):
    monkeypatch.delenv("LLM_ENDPOINT", raising=False)
    res = invoke("run", *args, "--out", tmp_path / "o")
    assert res.exit_code == 2
    assert not (tmp_path / "o").exists()


def test_remote_search_needs_key(tmp_path, monkeypatch):
    monkeypatch.delenv("SEARCH_API_KEY", raising=False)
    res = invoke("run", "--query", "x", "--scenario", SCENARIO,
                 "--search-endpoint", "https://search.example/api", "--out", tmp_path / "o")
    assert res.exit_code == 2 and "SEARCH_API_KEY" in res.output


def test_budget_run_reports_reason(tmp_path):
    res = invoke("run", *SCRIPTED, "--token-budget", 1, "--out", tmp_path)
    assert res.exit_code == 0
    assert "termination: BudgetExceeded" in res.output and "calls=0" in res.output


def test_eval_prints_and_writes(golden, tmp_path):
    res = invoke("eval", golden[0] / "timeline.json", REFS, "--out", tmp_path / "m.json")
    assert res.exit_code == 0 and "date_f1" in res.output and "mean" in res.output
    metrics = json.loads((tmp_path / "m.json").read_text())
    assert metrics["reference_count"] == 2
    assert invoke("eval", golden[0], REFS, "--truncate-to-ref").exit_code == 0
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert invoke("eval", bad, REFS).exit_code != 0


def test_replay_renders_transcript(golden, tmp_path):
    res = invoke("replay", golden[0])
    assert res.exit_code == 0
    assert "=== Iteration 2 ===" in res.output
    assert "<|begin_search_result|>" in res.output
    assert "Terminated: SupervisorTerminate" in res.output
    bad = tmp_path / "m.jsonl"
    bad.write_text('{"type": "header"}\n')
    assert invoke("replay", bad).exit_code != 0


def test_report_table(golden, tmp_path):
    dirs = [golden[0]]
    for kind in ("direct", "iter_rag"):
        d = tmp_path / kind
        assert invoke("baseline", kind, *SCRIPTED, "--refs", REFS, "--out", d).exit_code == 0
        dirs.append(d)
    res = invoke("report", *dirs, "--out", tmp_path / "table.txt")
    assert res.exit_code == 0
    lines = res.output.splitlines()
    assert lines[0].split() == ["Method", "AGENTIC", "DIRECT", "ITER_RAG"]
    assert [ln.split()[0] for ln in lines[1:]] == ["Token", "Align", "Date"]
    assert (tmp_path / "table.txt").read_text() == res.output
    assert invoke("report", tmp_path / "nowhere").exit_code != 0


def test_scripted_runs_are_reproducible(golden, tmp_path):
    res = invoke("run", *SCRIPTED, "--refs", REFS, "--out", tmp_path)
    assert res.exit_code == 0
    assert (tmp_path / "timeline.json").read_bytes() == (golden[0] / "timeline.json").read_bytes()
    assert comparable(tmp_path / "manifest.jsonl") == comparable(golden[0] / "manifest.jsonl")
    assert (tmp_path / "metrics.json").read_bytes() == (golden[0] / "metrics.json").read_bytes()
