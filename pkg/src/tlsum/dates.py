"""Calendar dates at day, month or year granularity."""

from __future__ import annotations

import datetime as dt
import enum
import functools
import re
from dataclasses import dataclass
from typing import Optional


class UnparseableDate(ValueError):
    pass


class InvalidDate(ValueError):
    pass


class Granularity(str, enum.Enum):
    DAY = "day"
    MONTH = "month"
    YEAR = "year"


_GRAN_RANK = {Granularity.DAY: 0, Granularity.MONTH: 1, Granularity.YEAR: 2}

MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12,
}
# three-letter forms plus "sept"
MONTHS.update({name[:3]: num for name, num in list(MONTHS.items())})
MONTHS["sept"] = 9

_MONTH_RE = "(" + "|".join(sorted(MONTHS, key=len, reverse=True)) + r")\.?"

_ISO_RE = re.compile(r"^(\d{4})(?:-(\d{1,2})(?:-(\d{1,2}))?)?$")
_MDY_RE = re.compile(rf"^{_MONTH_RE}\s+(\d{{1,2}})(?:st|nd|rd|th)?,?\s+(\d{{4}})$", re.I)
_DMY_RE = re.compile(rf"^(\d{{1,2}})(?:st|nd|rd|th)?\s+{_MONTH_RE},?\s+(\d{{4}})$", re.I)
_MY_RE = re.compile(rf"^{_MONTH_RE},?\s+(\d{{4}})$", re.I)

_RELATIVE = {"today": 0, "yesterday": -1, "tomorrow": 1}


@functools.total_ordering
@dataclass(frozen=True)
class CalendarDate:
    year: int
    month: Optional[int] = None
    day: Optional[int] = None
    granularity: Granularity = Granularity.DAY

    def __post_init__(self):
        g = Granularity(self.granularity)
        object.__setattr__(self, "granularity", g)
        if g is Granularity.DAY:
            if self.month is None or self.day is None:
                raise InvalidDate("day granularity needs month and day")
            try:
                dt.date(self.year, self.month, self.day)
            except ValueError as exc:
                raise InvalidDate(str(exc)) from None
        elif g is Granularity.MONTH:
            if self.month is None or self.day is not None:
                raise InvalidDate("month granularity needs a month and no day")
            if not 1 <= self.month <= 12:
                raise InvalidDate(f"month {self.month} out of range")
        else:
            if self.month is not None or self.day is not None:
                raise InvalidDate("year granularity carries no month or day")
        if not 1 <= self.year <= 9999:
            raise InvalidDate(f"year {self.year} out of range")

    @classmethod
    def of(cls, year: int, month: int | None = None, day: int | None = None) -> "CalendarDate":
        """Build a date whose granularity follows from which parts are given."""
        if day is not None:
            return cls(year, month, day, Granularity.DAY)
        if month is not None:
            return cls(year, month, None, Granularity.MONTH)
        return cls(year, None, None, Granularity.YEAR)

    @classmethod
    def from_date(cls, d: dt.date) -> "CalendarDate":
        return cls(d.year, d.month, d.day, Granularity.DAY)

    def sort_key(self) -> tuple:
        return (self.year, self.month or 1, self.day or 1, _GRAN_RANK[self.granularity])

    def __lt__(self, other):
        if not isinstance(other, CalendarDate):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    @property
    def is_day(self) -> bool:
        return self.granularity is Granularity.DAY

    def midpoint(self) -> dt.date:
        """Representative day: the date itself, the 15th, or July 1."""
        if self.granularity is Granularity.DAY:
            return dt.date(self.year, self.month, self.day)
        if self.granularity is Granularity.MONTH:
            return dt.date(self.year, self.month, 15)
        return dt.date(self.year, 7, 1)

    def to_date(self) -> dt.date:
        if not self.is_day:
            raise InvalidDate(f"{self} is not a day")
        return dt.date(self.year, self.month, self.day)

    def __str__(self) -> str:
        return format_date(self)


def format_date(d: CalendarDate) -> str:
    if d.granularity is Granularity.DAY:
        return f"{d.year:04d}-{d.month:02d}-{d.day:02d}"
    if d.granularity is Granularity.MONTH:
        return f"{d.year:04d}-{d.month:02d}"
    return f"{d.year:04d}"


def _checked(year: int, month: int | None, day: int | None) -> CalendarDate:
    if month is not None and not 1 <= month <= 12:
        raise InvalidDate(f"month {month} out of range")
    if day is not None and not 1 <= day <= 31:
        raise InvalidDate(f"day {day} out of range")
    return CalendarDate.of(year, month, day)


def parse_date(text: str, reference: CalendarDate | None = None) -> CalendarDate:
    """Parse an ISO or English date expression at the narrowest granularity it states.

    ``today``/``yesterday``/``tomorrow`` resolve against ``reference``, which must be
    a day.  Anything else relative ("last week", "someday") is rejected.
    """
    s = " ".join(text.strip().split())
    if not s:
        raise UnparseableDate("empty date expression")
    low = s.lower().rstrip(".")
    if low in _RELATIVE:
        if reference is None or not reference.is_day:
            raise UnparseableDate(f"relative date {s!r} without a day reference")
        return CalendarDate.from_date(reference.to_date() + dt.timedelta(days=_RELATIVE[low]))

    m = _ISO_RE.match(s)
    if m:
        year, month, day = m.groups()
        return _checked(int(year), int(month) if month else None, int(day) if day else None)
    m = _MDY_RE.match(s)
    if m:
        return _checked(int(m.group(3)), MONTHS[m.group(1).lower()], int(m.group(2)))
    m = _DMY_RE.match(s)
    if m:
        return _checked(int(m.group(3)), MONTHS[m.group(2).lower()], int(m.group(1)))
    m = _MY_RE.match(s)
    if m:
        return _checked(int(m.group(2)), MONTHS[m.group(1).lower()], None)
    raise UnparseableDate(f"no date pattern matches {s!r}")


def try_parse_date(text: str, reference: CalendarDate | None = None) -> CalendarDate | None:
    try:
        return parse_date(text, reference)
    except (UnparseableDate, InvalidDate):
        return None


def date_distance_days(a: CalendarDate, b: CalendarDate) -> int:
    return abs((a.midpoint() - b.midpoint()).days)
