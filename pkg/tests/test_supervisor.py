import json


from conftest import day, scripted, timeline
from tlsum.dates import CalendarDate
from tlsum.llm import ModelProfile
from tlsum.model import (
    DatedEvent, Deficiency, DeficiencyKind, EpisodeConfig, GlobalEventMemory, SourceRef, Verdict,
)
from tlsum.supervisor import analyze, fallback_query, make_plan, should_terminate

LONG = "apple shipped a new product to stores around the world today"


def xi(*events):
    return GlobalEventMemory(tuple(DatedEvent(d, desc, (), (SourceRef("s", 0),)) for d, desc in events))


def kinds(ds):
    return [d.kind for d in ds]


def test_empty_timeline_misses_every_day_event():
    ds = analyze(timeline({}), xi((day(0), "mac unveiled"), (day(9), "ipod launched")))
    assert kinds(ds) == [DeficiencyKind.MISSING_EVENT] * 2


def test_sparse_gap_worked_example():
    tl = timeline({d: f"{LONG} number {d}" for d in (0, 10, 20, 120)})
    ds = analyze(tl, xi())
    assert kinds(ds) == [DeficiencyKind.SPARSE_REGION]
    assert (ds[0].anchor, ds[0].end) == (day(20), day(120))


def test_clean_timeline_has_no_deficiencies():
    tl = timeline({d: f"{LONG} number {d}" for d in (0, 10, 20, 30)})
    assert analyze(tl, xi(*((day(d + 1), "unrelated words entirely") for d in (0, 10, 20, 30)))) == []


def test_coarse_and_short_entries():
    ds = analyze(timeline({0: "too short"}), xi((CalendarDate.of(2020, 1), "Mac Studio M2 Ultra announcement")))
    assert kinds(ds) == [DeficiencyKind.COARSE_TIMESTAMP, DeficiencyKind.UNDER_SPECIFIED]


def test_similar_text_far_away_counts_as_covered():
    ds = analyze(timeline({0: LONG}), xi((day(100), "apple shipped a new product")))
    assert ds == []


def test_inserting_qualifying_entry_relieves_missing_event():
    memory = xi((day(50), "mac studio unveiled at wwdc"))
    before = timeline({0: LONG})
    assert kinds(analyze(before, memory)) == [DeficiencyKind.MISSING_EVENT]
    after = timeline({0: LONG, 52: "the mac studio was unveiled at wwdc with the m2 ultra chip"})
    assert DeficiencyKind.MISSING_EVENT not in kinds(analyze(after, memory))


def test_empty_deficiencies_terminate():
    plan = make_plan([], "Apple")
    assert plan.verdict is Verdict.TERMINATE and plan.items == ()


def test_malformed_plan_falls_back_to_templates():
    d = Deficiency(DeficiencyKind.COARSE_TIMESTAMP, "Mac Studio M2 Ultra announcement", CalendarDate.of(2023, 6))
    plan = make_plan([d], "Apple", scripted(defaults={"plan": "not json"}), ModelProfile.reasoner())
    assert plan.verdict is Verdict.CONTINUE and plan.source == "fallback"
    assert plan.queries == ["Mac Studio M2 Ultra announcement exact date"]


def test_well_formed_plan_covers_every_deficiency():
    ds = [Deficiency(DeficiencyKind.MISSING_EVENT, "mac launch", day(0)),
          Deficiency(DeficiencyKind.UNDER_SPECIFIED, "short", day(3)),
          Deficiency(DeficiencyKind.SPARSE_REGION, "gap", day(3), day(90))]
    response = json.dumps({"items": [{"deficiency": i, "queries": [f"q{i}"]} for i in (1, 2, 3)]})
    plan = make_plan(ds, "Apple", scripted(defaults={"plan": response}), ModelProfile.reasoner())
    assert plan.source == "model" and plan.queries == ["q1", "q2", "q3"]
    partial = json.dumps({"items": [{"deficiency": 1, "queries": ["q1"]}]})
    plan = make_plan(ds, "Apple", scripted(defaults={"plan": partial}), ModelProfile.reasoner())
    assert plan.source == "fallback" and len(plan.queries) == 3


def test_fallback_templates():
    assert fallback_query(Deficiency(DeficiencyKind.MISSING_EVENT, "ipod launch", CalendarDate.of(2001, 10, 23)),
                          "Apple") == "Apple ipod launch 2001"
    assert fallback_query(Deficiency(DeficiencyKind.UNDER_SPECIFIED, "x", CalendarDate.of(2001, 10, 23)),
                          "Apple") == "Apple 2001-10-23 details"
    assert fallback_query(Deficiency(DeficiencyKind.SPARSE_REGION, "gap", day(0), day(40)),
                          "Apple") == "Apple events between 2020-01-01 and 2020-02-10"


def test_iteration_cap_terminates():
    cfg = EpisodeConfig("Apple", max_iterations=2)
    d = Deficiency(DeficiencyKind.MISSING_EVENT, "x", day(0))
    plan = make_plan([d], "Apple")
    assert not should_terminate(plan, 1, cfg)
    assert should_terminate(plan, 2, cfg)
    assert should_terminate(make_plan([], "Apple"), 1, cfg)


def test_analysis_is_deterministic():
    tl = timeline({d: f"{LONG} {d}" for d in (0, 3, 5, 200)})
    memory = xi((day(90), "orchard harvest"), (CalendarDate.of(2020), "year event"))
    assert analyze(tl, memory) == analyze(tl, memory)
