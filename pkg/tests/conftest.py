import datetime as dt
from pathlib import Path

import pytest

from tlsum.dates import CalendarDate
from tlsum.llm import Gateway, ScriptedResponder
from tlsum.model import TimelineEntry, TimelineMemory

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
CORPUS = FIXTURES / "apple_corpus.jsonl"
SCENARIO = FIXTURES / "apple_scenario.json"
CONFIG = FIXTURES / "apple_config.json"
REFS = FIXTURES / "apple_refs.json"

BASE_DAY = dt.date(2020, 1, 1)


def day(offset: int) -> CalendarDate:
    return CalendarDate.from_date(BASE_DAY + dt.timedelta(days=offset))


def timeline(mapping: dict) -> TimelineMemory:
    """{day offset or CalendarDate: summary} -> TimelineMemory."""
    entries = []
    for k, v in mapping.items():
        d = day(k) if isinstance(k, int) else k
        entries.append(TimelineEntry(d, v))
    return TimelineMemory(tuple(sorted(entries, key=lambda e: e.date)))


def scripted(entries=(), defaults=None, default=None) -> Gateway:
    return Gateway(ScriptedResponder.from_dict(
        {"entries": list(entries), "defaults": defaults or {}, "default": default}))


@pytest.fixture
def fixtures_dir():
    return FIXTURES


# --- acceptance summary: one PASS/FAIL line per criterion ------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[number] = (title, "PASS" if report.passed else "FAIL")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result().criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{verdict}  criterion {number:>2}: {title}")
