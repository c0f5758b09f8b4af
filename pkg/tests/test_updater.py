import random

import pytest

from conftest import day, scripted, timeline
from generators import sub_timeline, timeline_memory
from tlsum.dates import CalendarDate
from tlsum.llm import ModelProfile
from tlsum.model import DatedEvent, GlobalEventMemory, SourceRef, SubTimeline, TimelineEntry
from tlsum.updater import (
    EmptySubTimeline, MergeMode, TimelineUpdater, lost_entries, merge_deterministic, parse_subtimeline,
)


def sub(mapping):
    return SubTimeline(timeline(mapping).entries)


def test_parse_single_line():
    st = parse_subtimeline("2001-11-10: Introduction of the iPod.")
    assert len(st) == 1
    assert st.entries[0].date == CalendarDate.of(2001, 11, 10)
    assert st.entries[0].summary == "Introduction of the iPod."


def test_parse_rejects_body_without_dates():
    with pytest.raises(EmptySubTimeline):
        parse_subtimeline("no dates here")


def test_parse_joins_same_date_lines():
    st = parse_subtimeline("2023-06-05: Apple unveiled the Mac Studio.\n"
                           "- **2023-06-05**: Pricing starts at 1999 dollars\n"
                           "Some reasoning text that is ignored.")
    assert len(st) == 1
    assert st.entries[0].summary == "Apple unveiled the Mac Studio. Pricing starts at 1999 dollars."


def test_parse_skips_coarse_and_long_form_dates_are_read():
    st = parse_subtimeline("2023-06: only a month\nJune 13, 2023: The Mac Studio ships.")
    assert [str(e.date) for e in st.entries] == ["2023-06-13"]


def test_disjoint_union():
    out = merge_deterministic(timeline({0: "first event."}), sub({5: "second event."}))
    assert out.dates() == [day(0), day(5)]


def test_duplicate_sentence_leaves_entry_unchanged():
    mem = timeline({0: "Apple unveiled the Mac Studio."})
    out = merge_deterministic(mem, sub({0: "apple unveiled the mac studio"}), iteration=2)
    assert out.entries == mem.entries
    assert out.revision == mem.revision + 1


def test_novel_sentence_is_appended():
    mem = timeline({0: "apple unveiled the mac studio"})
    out = merge_deterministic(mem, sub({0: "pricing starts at 1999 dollars"}), iteration=1)
    assert out.entries[0].summary == "apple unveiled the mac studio. pricing starts at 1999 dollars."
    assert out.entries[0].last_revised_at_iteration == 1
    assert out.entries[0].introduced_at_iteration == 0


def test_merge_requires_entries():
    with pytest.raises(EmptySubTimeline):
        merge_deterministic(timeline({0: "x"}), SubTimeline())


@pytest.mark.parametrize("seed", range(60))
def test_random_merges_lose_nothing_and_are_idempotent(seed):
    rng = random.Random(seed)
    mem = timeline_memory(rng)
    s = sub_timeline(rng, mem)
    once = merge_deterministic(mem, s)
    assert lost_entries(mem, once) == []
    assert len(set(once.dates())) == len(once)
    assert set(once.dates()) == set(mem.dates()) | set(s_e.date for s_e in s.entries)
    assert merge_deterministic(once, s).entries == once.entries


XI = GlobalEventMemory((DatedEvent(day(0), "mac studio unveiled", (), (SourceRef("wwdc", 0),)),))


def updater(response):
    return TimelineUpdater(MergeMode.ASSISTED, scripted(defaults={"update": response}),
                           ModelProfile.reasoner(), "Apple")


def test_support_comes_from_same_day_global_events():
    out = TimelineUpdater().merge(timeline({}), sub({0: "Apple unveiled the Mac Studio."}), XI)
    assert out.entries[0].support == (SourceRef("wwdc", 0),)


def test_assisted_rewrite_within_floor_is_accepted():
    mem = timeline({0: "Apple unveiled the Mac Studio."})
    u = updater("2020-01-01: Apple unveiled the new Mac Studio desktop.\n"
                "2020-01-03: Pricing starts at 1999 dollars for the base model.")
    out = u.merge(mem, sub({2: "Pricing starts at 1999 dollars."}), XI, iteration=1)
    assert u.last_status == "assisted"
    assert out.get(day(0)).summary == "Apple unveiled the new Mac Studio desktop."
    assert out.get(day(2)).summary == "Pricing starts at 1999 dollars for the base model."
    assert lost_entries(mem, out) == []


def test_assisted_rewrite_that_drops_content_is_repaired():
    mem = timeline({0: "Apple unveiled the Mac Studio.", 9: "The M2 Ultra chip powers it."})
    u = updater("2020-01-01: Quarterly earnings were strong.")
    out = u.merge(mem, sub({4: "Reviews praised the machine."}), XI, iteration=1)
    assert u.last_status == "repaired"
    assert lost_entries(mem, out) == []
    assert out.dates() == [day(0), day(4), day(9)]


def test_assisted_ignores_invented_dates():
    mem = timeline({0: "Apple unveiled the Mac Studio."})
    out = updater("2020-01-01: Apple unveiled the Mac Studio.\n2020-02-01: Invented event here.").merge(
        mem, sub({1: "Orders opened."}), XI)
    assert out.dates() == [day(0), day(1)]


def test_updater_entries_stay_day_granular():
    with pytest.raises(ValueError):
        TimelineEntry(CalendarDate.of(2020, 1), "month only")
