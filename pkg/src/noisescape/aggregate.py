"""Energy averaging, hourly metrics and per-band daily series."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import InsufficientDataError, check_series
from .model import (
    DEFAULT_BANDS,
    BandScheme,
    HourlyMetrics,
    NoiseSample,
    TimeBand,
    band_hours,
    band_of,
    station_key,
)

__all__ = [
    "energy_average",
    "hourly_aggregate",
    "aggregate_hourly",
    "BandDay",
    "BandDailySeries",
    "band_date",
    "build_band_series",
    "build_all_band_series",
    "percentile_summary",
    "PERCENTILES",
    "HourlyAggregator",
    "InsufficientDataError",
]

PERCENTILES = (5, 25, 50, 75, 95)


def energy_average(levels: Sequence[float] | np.ndarray) -> float:
    """Energy-equivalent mean of dB levels.

    ``10 * log10(mean(10 ** (L / 10)))``: the constant level carrying the
    same acoustic energy as the input levels over the same duration.

    Parameters
    ----------
    levels : array_like
        Non-empty sequence of finite dB values.

    Returns
    -------
    float
        The energy average, always within ``[min(levels), max(levels)]``.
    """
    arr = check_series(levels, min_length=1, name="levels")
    return _energy(arr.tolist())


def _energy(vals: list[float]) -> float:
    top = max(vals)
    # factoring out the max keeps 10**x in range for any dB input
    power = math.fsum(10.0 ** ((v - top) / 10.0) for v in vals) / len(vals)
    return min(max(top + 10.0 * math.log10(power), min(vals)), top)


def hourly_aggregate(samples: Sequence[NoiseSample]) -> HourlyMetrics | None:
    """Summarize the samples of one station-hour.

    Returns ``None`` for an empty hour so that missing hours are never
    reported as zeros.
    """
    if not samples:
        return None
    first = samples[0]
    hour = first.timestamp.replace(minute=0, second=0, microsecond=0)
    for s in samples:
        if s.station_id != first.station_id or s.timestamp.replace(minute=0, second=0, microsecond=0) != hour:
            raise ValueError("hourly_aggregate needs samples of a single station-hour")
    return _summarize(first.station_id, hour, samples)


def _summarize(sid: str, hour: datetime, samples: Sequence[NoiseSample]) -> HourlyMetrics:
    leq = [s.leq for s in samples]
    return HourlyMetrics(sid, hour, _energy(leq), max(s.lmax for s in samples), min(leq), len(leq))


def _hour_key(s: NoiseSample):
    t = s.timestamp
    return s.station_id, t - timedelta(minutes=t.minute, seconds=t.second, microseconds=t.microsecond)


def aggregate_hourly(samples: Iterable[NoiseSample]) -> dict[str, list[HourlyMetrics]]:
    """Hourly metrics for every station, each list sorted by ``hour_start``.

    ``samples`` must be sorted by ``(station_id, timestamp)`` as returned by
    :func:`noisescape.ingest.parse_samples`.
    """
    out: dict[str, list[HourlyMetrics]] = {}
    for (sid, hour), group in itertools.groupby(samples, key=_hour_key):
        out.setdefault(sid, []).append(_summarize(sid, hour, list(group)))
    for sid, hours in out.items():
        for a, b in zip(hours, hours[1:]):
            if b.hour_start <= a.hour_start:
                raise ValueError(f"samples for station {sid!r} are not sorted by time")
    return out


@dataclass(frozen=True, slots=True)
class BandDay:
    date: date
    avg: float
    max: float
    min: float
    n_hours: int


@dataclass
class BandDailySeries:
    station_id: str
    band: TimeBand
    entries: list[BandDay] = field(default_factory=list)

    def dates(self) -> list[date]:
        return [e.date for e in self.entries]

    def values(self, metric: str = "avg") -> np.ndarray:
        return np.array([getattr(e, metric) for e in self.entries], dtype=float)

    def day_index(self) -> np.ndarray:
        """Days elapsed since the first entry, preserving calendar gaps."""
        if not self.entries:
            return np.empty(0)
        d0 = self.entries[0].date
        return np.array([(e.date - d0).days for e in self.entries], dtype=float)


def band_date(hour_start: datetime, bands: BandScheme = DEFAULT_BANDS) -> date:
    """Civil date a band-hour is attributed to.

    Night hours after midnight belong to the night that started the
    previous evening.
    """
    if hour_start.hour < bands.day_start:
        return (hour_start - timedelta(days=1)).date()
    return hour_start.date()


def build_band_series(
    hourly: Sequence[HourlyMetrics],
    band: TimeBand,
    *,
    strict: bool = False,
    bands: BandScheme = DEFAULT_BANDS,
) -> BandDailySeries:
    """Aggregate one station's hourly averages into a daily series for ``band``.

    Each entry carries the energy average, maximum and minimum of the
    hourly ``avg`` values that fall in the band on that date. With
    ``strict=True`` low-coverage hours (fewer than 6 samples) are skipped.
    Dates without any in-band hour are omitted.
    """
    band = TimeBand(band)
    width = len(band_hours(band, bands))
    groups: dict[date, list[float]] = {}
    sid = hourly[0].station_id if hourly else ""
    for h in hourly:
        if band_of(h.hour_start, bands) is not band or (strict and h.low_coverage):
            continue
        groups.setdefault(band_date(h.hour_start, bands), []).append(h.avg)

    entries = []
    for d in sorted(groups):
        vals = groups[d]
        if len(vals) > width:
            raise ValueError(f"duplicate hours for {sid!r} {band} on {d}")
        entries.append(BandDay(d, _energy(vals), max(vals), min(vals), len(vals)))
    return BandDailySeries(sid, band, entries)


def build_all_band_series(
    hourly: dict[str, list[HourlyMetrics]],
    *,
    strict: bool = False,
    bands: BandScheme = DEFAULT_BANDS,
) -> dict[tuple[str, TimeBand], BandDailySeries]:
    return {
        (sid, band): build_band_series(hours, band, strict=strict, bands=bands)
        for sid, hours in sorted(hourly.items(), key=lambda kv: station_key(kv[0]))
        for band in TimeBand
    }


def percentile_summary(values: Sequence[float] | np.ndarray) -> dict[str, float]:
    """5th, 25th, 50th, 75th and 95th percentiles of ``values``.

    Uses linear interpolation between closest ranks: for sorted
    ``x[0..n-1]`` the q-th percentile sits at position ``h = (n - 1) q / 100``
    and equals ``x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])``.

    Raises
    ------
    InsufficientDataError
        If ``values`` is empty.
    """
    arr = check_series(values, min_length=1, name="values")
    qs = np.percentile(arr, PERCENTILES, method="linear")
    return {f"p{q}": float(v) for q, v in zip(PERCENTILES, qs)}


class HourlyAggregator(TransformerMixin, BaseEstimator):
    """Transformer turning 5-minute samples into hourly metrics.

    Parameters
    ----------
    strict : bool, default=False
        Drop low-coverage hours (fewer than 6 of 12 slots) from the output.
    """

    def __init__(self, strict: bool = False):
        self.strict = strict

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[HourlyMetrics]:
        hourly = aggregate_hourly(sorted(X, key=lambda s: (s.station_id, s.timestamp)))
        rows = [h for hours in hourly.values() for h in hours]
        if self.strict:
            rows = [h for h in rows if not h.low_coverage]
        return rows

