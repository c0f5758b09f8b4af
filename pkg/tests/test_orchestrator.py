import json

import pytest

from conftest import CORPUS, SCENARIO
from tlsum.llm import Gateway, ScriptedResponder
from tlsum.manifest import Termination
from tlsum.model import EpisodeConfig
from tlsum.orchestrator import (
    ActionKind, AgentAction, Backends, MalformedAction, detect_action, run_episode,
)
from tlsum.retrieval import LocalSearch

S = "<|begin_search_query|>{}<|end_search_query|>"
U = "<|begin_update_timeline|>\n{}\n<|end_update_timeline|>"
APPLE_EXTRACT = {
    "thousand songs": [{"date": "2001-10-23", "description": "iPod music player launches."}],
    "Macworld conference": [{"date": "2007-01-09", "description": "Jobs announces the iPhone."}],
    "Tim Cook became": [{"date": "2011-08-24", "description": "Tim Cook succeeds Jobs as chief executive."}],
}


def test_detect_search():
    text = "I need the exact date.\n" + S.format("Apple Mac Studio M2 Ultra release date")
    assert detect_action(text) == AgentAction(ActionKind.SEARCH, "Apple Mac Studio M2 Ultra release date")


def test_detect_update_and_finish():
    assert detect_action(U.format("2023-06-05: x")).kind is ActionKind.UPDATE_TIMELINE
    assert detect_action("All done, nothing more to add.") == AgentAction(ActionKind.FINISH)


def test_detect_uses_most_recent_pair():
    text = S.format("old query") + " result... " + S.format("new query")
    assert detect_action(text).payload == "new query"


@pytest.mark.parametrize("text", ["<|begin_search_query|>abc", S.format("   "), "stray <|end_search_query|>"])
def test_detect_malformed(text):
    with pytest.raises(MalformedAction):
        detect_action(text)


def backends(explore, plan=None, extract=APPLE_EXTRACT, **kw):
    entries = [{"purpose": "extract", "match": m, "response": json.dumps(v), "repeat": True}
               for m, v in extract.items()]
    entries += [{"purpose": "explore", "response": r} for r in explore]
    defaults = {"extract": "[]", "synthesize": "[]", "plan": plan or "not json"}
    gw = Gateway(ScriptedResponder.from_dict({"entries": entries, "defaults": defaults}))
    return Backends(gateway=gw, search=LocalSearch.from_jsonl(CORPUS), **kw)


def config(**kw):
    return EpisodeConfig(**{"query": "Apple iPhone iPod Cook", "n_init": 8, "n_exp": 2, "top_k": 4,
                            "chunk_size_words": 200, **kw})


FULL = ("2001-10-23: Apple launches the iPod music player for a thousand songs.\n"
        "2007-01-09: Steve Jobs announces the iPhone at Macworld in San Francisco.\n"
        "2011-08-24: Tim Cook succeeds Steve Jobs as chief executive of Apple.")


def test_immediate_finish_ends_after_first_review():
    # an empty timeline always leaves the global events missing, so only the cap stops it
    tl, m = run_episode(config(max_iterations=1), backends(["Nothing to do."]))
    assert m.termination is Termination.MAX_ITERATIONS
    assert len(m.iterations) == 1 and m.iterations[0].barren
    assert len(tl) == 0


def test_one_search_and_update_per_iteration():
    explore = [
        S.format("Apple iPod"), U.format(FULL.splitlines()[0]), "done",
        S.format("Tim Cook chief executive"), U.format("\n".join(FULL.splitlines()[1:])), "done",
    ]
    tl, m = run_episode(config(), backends(explore))
    assert m.termination is Termination.SUPERVISOR_TERMINATE
    assert [(it.searches, it.updates) for it in m.iterations] == [(1, 1), (1, 1)]
    assert m.count("action", kind="search") == 2 and m.count("action", kind="update") == 2
    assert [str(d) for d in tl.dates()] == ["2001-10-23", "2007-01-09", "2011-08-24"]
    # sources flow from the global memory onto timeline entries
    assert {s.doc_id for s in tl.entries[0].support} == {"ipod"}


def test_plan_from_model_is_recorded():
    plan = json.dumps({"items": [{"deficiency": i, "queries": [f"q{i}"]} for i in (1, 2, 3)]})
    _, m = run_episode(config(max_iterations=1), backends(["done"], plan=plan))
    assert m.termination is Termination.MAX_ITERATIONS
    rec = [r for r in m.records if r["type"] == "plan"][0]
    assert rec["plan"]["source"] == "model"
    assert len(rec["deficiencies"]) == 3


def test_malformed_action_gets_one_reminder():
    explore = ["<|begin_search_query|>oops", U.format(FULL), "done"]
    _, m = run_episode(config(), backends(explore))
    assert m.count("action", kind="malformed") == 1
    assert m.iterations[0].updates == 1
    assert m.termination is Termination.SUPERVISOR_TERMINATE


def test_second_malformed_action_ends_iteration():
    explore = ["<|begin_search_query|>oops", "<|begin_update_timeline|>again", U.format(FULL), "done"]
    _, m = run_episode(config(max_iterations=2), backends(explore))
    assert m.count("action", kind="malformed") == 2
    assert m.iterations[0].barren


def test_search_limit_is_enforced():
    explore = [S.format("Apple iPod"), S.format("Apple iPhone"), S.format("Tim Cook")]
    _, m = run_episode(config(max_searches_per_iteration=2, max_iterations=1), backends(explore))
    assert m.iterations[0].searches == 2
    assert m.count("action", kind="search_refused") == 1


def test_rejected_update_is_reported_back():
    explore = [U.format("no dates in here"), U.format(FULL), "done"]
    tl, m = run_episode(config(), backends(explore))
    assert m.count("action", kind="update_rejected") == 1
    assert len(tl) == 3


def test_budget_of_one_token_makes_no_calls():
    b = backends(["done"])
    tl, m = run_episode(config(token_budget=1), b)
    assert m.termination is Termination.BUDGET_EXCEEDED
    assert m.usage.call_count == 0 and m.count("call") == 0
    assert m.iterations == [] and len(tl) == 0


def test_budget_hit_mid_episode_stops_early():
    explore = [U.format(FULL), "done"]
    b = backends(explore)
    _, full = run_episode(config(), backends(explore))
    spent = full.usage.total
    tl, m = run_episode(config(token_budget=spent // 2), b)
    assert m.termination is Termination.BUDGET_EXCEEDED
    assert m.usage.total < spent


def test_no_events_is_empty_cognition():
    tl, m = run_episode(config(), backends(["done"], extract={}))
    assert m.termination is Termination.EMPTY_COGNITION
    assert len(tl) == 0


def test_assisted_updater_mode_runs():
    from tlsum.updater import MergeMode
    b = backends([U.format(FULL), "done"], updater_mode=MergeMode.ASSISTED)
    b.gateway.backend.defaults["update"] = FULL
    tl, m = run_episode(config(), b)
    assert len(tl) == 3
    assert any(r.get("merge") == "assisted" for r in m.records if r["type"] == "revision")


def test_golden_scenario_shape():
    from tlsum import runs
    opts = runs.BackendOptions(scenario=str(SCENARIO), corpus=str(CORPUS))
    cfg = runs.load_config(str(CORPUS.parent / "apple_config.json"))
    tl, m = run_episode(cfg, runs.build_backends(opts))
    assert m.termination is Termination.SUPERVISOR_TERMINATE
    assert [(it.searches, it.updates) for it in m.iterations] == [(2, 1), (1, 1)]
    assert len(tl) == 8
