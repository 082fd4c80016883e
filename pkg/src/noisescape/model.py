"""Domain types, time bands and the pre/during period split.

All timestamps are naive local civil date-times. No timezone or DST
conversion is ever applied: the band definitions are wall-clock concepts.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from typing import NamedTuple

__all__ = [
    "DB_MIN",
    "DB_MAX",
    "SLOT",
    "HOUR",
    "TimeBand",
    "BandScheme",
    "DEFAULT_BANDS",
    "Period",
    "GeoPoint",
    "Station",
    "NoiseSample",
    "HourlyMetrics",
    "PeriodSplit",
    "DEFAULT_SPLIT",
    "band_of",
    "band_hours",
    "period_of",
    "check_decibel",
    "station_key",
    "station_key",
]

DB_MIN = 0.0
DB_MAX = 140.0
SLOT = timedelta(minutes=5)
HOUR = timedelta(hours=1)
SLOTS_PER_HOUR = 12


class TimeBand(str, enum.Enum):
    NIGHT = "night"
    DAY = "day"
    EVENING = "evening"

    def __str__(self) -> str:
        return self.value


class Period(str, enum.Enum):
    PRE = "pre"
    DURING = "during"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class BandScheme:
    """Start hours of the three bands; each band runs until the next starts.

    Requires ``0 < day_start < evening_start < night_start <= 24``. Night
    wraps past midnight and ends at ``day_start``.
    """

    day_start: int = 7
    evening_start: int = 19
    night_start: int = 23

    def __post_init__(self):
        if not (0 < self.day_start < self.evening_start < self.night_start <= 24):
            raise ValueError(
                "band starts must satisfy 0 < day < evening < night <= 24, got "
                f"{self.day_start}/{self.evening_start}/{self.night_start}"
            )

    def band(self, hour: int) -> TimeBand:
        if hour >= self.night_start or hour < self.day_start:
            return TimeBand.NIGHT
        return TimeBand.DAY if hour < self.evening_start else TimeBand.EVENING

    def hours(self, band: TimeBand) -> tuple[int, ...]:
        """Local hours of ``band`` in chronological order (night from its start)."""
        band = TimeBand(band)
        if band is TimeBand.NIGHT:
            return tuple(range(self.night_start, 24)) + tuple(range(self.day_start))
        return tuple(h for h in range(24) if self.band(h) is band)


DEFAULT_BANDS = BandScheme()
# boundary hours belong to the band they start
_BAND_BY_HOUR = tuple(DEFAULT_BANDS.band(h) for h in range(24))


def band_of(timestamp: datetime, bands: BandScheme | None = None) -> TimeBand:
    """Return the time-of-day band of a local timestamp.

    Night is 23:00-07:00, Day 07:00-19:00, Evening 19:00-23:00 by default,
    each interval closed on the left.
    """
    if bands is None:
        return _BAND_BY_HOUR[timestamp.hour]
    return bands.band(timestamp.hour)


def band_hours(band: TimeBand, bands: BandScheme = DEFAULT_BANDS) -> tuple[int, ...]:
    """Local hours of day belonging to ``band``, in chronological band order."""
    return bands.hours(band)


def station_key(station_id: str) -> tuple:
    """Sort key ordering numeric ids numerically ("2" before "10")."""
    s = station_id.strip()
    return (0, int(s), s) if s.isdigit() else (1, 0, s)


def check_decibel(value: float) -> bool:
    """True when ``value`` is finite and inside the plausible dB range."""
    return math.isfinite(value) and DB_MIN <= value <= DB_MAX


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """WGS-84 point; longitude is signed degrees east (west is negative)."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat!r}")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon!r}")


@dataclass(frozen=True, slots=True)
class Station:
    station_id: str
    name: str
    location: GeoPoint


class NoiseSample(NamedTuple):
    """One 5-minute record."""

    station_id: str
    timestamp: datetime
    leq: float
    lmax: float


class HourlyMetrics(NamedTuple):
    """Per station-hour summary: energy-average L_eq, max L_max, min L_eq."""

    station_id: str
    hour_start: datetime
    avg: float
    max: float
    min: float
    n_samples: int

    @property
    def low_coverage(self) -> bool:
        # fewer than half of the 12 five-minute slots present
        return self.n_samples < SLOTS_PER_HOUR // 2


@dataclass(frozen=True, slots=True)
class PeriodSplit:
    """Analysis window ``[analysis_start, analysis_end)`` cut at ``split_instant``.

    Timestamps before the split are *pre*, the rest *during*.
    """

    analysis_start: datetime = datetime(2020, 1, 1)
    split_instant: datetime = datetime(2020, 3, 25)
    analysis_end: datetime = datetime(2020, 5, 12)

    def __post_init__(self):
        if not (self.analysis_start < self.split_instant < self.analysis_end):
            raise ValueError(
                "PeriodSplit requires analysis_start < split_instant < analysis_end, got "
                f"{self.analysis_start} / {self.split_instant} / {self.analysis_end}"
            )

    def contains(self, timestamp: datetime) -> bool:
        return self.analysis_start <= timestamp < self.analysis_end

    def bounds(self, period: Period) -> tuple[datetime, datetime]:
        if Period(period) is Period.PRE:
            return self.analysis_start, self.split_instant
        return self.split_instant, self.analysis_end

    def hours(self, period: Period | None = None) -> int:
        """Number of calendar hours in a period (or the whole window)."""
        if period is None:
            lo, hi = self.analysis_start, self.analysis_end
        else:
            lo, hi = self.bounds(period)
        return int((hi - lo) // HOUR)

    def dates(self) -> list[date]:
        d, out = self.analysis_start.date(), []
        while datetime.combine(d, datetime.min.time()) < self.analysis_end:
            out.append(d)
            d += timedelta(days=1)
        return out


DEFAULT_SPLIT = PeriodSplit()


def period_of(timestamp: datetime, split: PeriodSplit = DEFAULT_SPLIT) -> Period:
    """Classify ``timestamp`` as pre or during relative to ``split``.

    Raises
    ------
    ValueError
        If the timestamp lies outside the analysis window.
    """
    if not split.contains(timestamp):
        raise ValueError(
            f"{timestamp.isoformat()} outside analysis window "
            f"[{split.analysis_start.isoformat()}, {split.analysis_end.isoformat()})"
        )
    return Period.PRE if timestamp < split.split_instant else Period.DURING
