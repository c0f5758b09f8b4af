"""Timeline construction from news corpora by interleaving model reasoning with targeted retrieval."""

from .dates import CalendarDate, Granularity, date_distance_days, format_date, parse_date
from .model import EpisodeConfig, TimelineMemory
from .orchestrator import Backends, run_episode

__version__ = "0.1.0"

__all__ = [
    "Backends", "CalendarDate", "EpisodeConfig", "Granularity", "TimelineMemory",
    "date_distance_days", "format_date", "parse_date", "run_episode",
]
