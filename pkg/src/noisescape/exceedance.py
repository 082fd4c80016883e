"""Threshold exceedance counts and pre/during period energy averages."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from .aggregate import _energy
from .model import DEFAULT_SPLIT, HourlyMetrics, Period, PeriodSplit, station_key

__all__ = [
    "THRESHOLD_DB",
    "ExceedanceRow",
    "PeriodSummary",
    "percentage",
    "exceedance_report",
    "period_summary",
]

log = logging.getLogger(__name__)

THRESHOLD_DB = 55.0


def percentage(count: int, total: int) -> float:
    """``100 * count / total`` rounded half-up to two decimals (exact arithmetic)."""
    if total <= 0:
        raise ValueError("percentage needs a positive denominator")
    pct = (Decimal(100 * count) / Decimal(total)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    return float(pct)


@dataclass(frozen=True, slots=True)
class ExceedanceRow:
    station_id: str
    pre_count: int
    during_count: int
    pre_total: int
    during_total: int

    @property
    def pre_pct(self) -> float | None:
        return percentage(self.pre_count, self.pre_total) if self.pre_total else None

    @property
    def during_pct(self) -> float | None:
        return percentage(self.during_count, self.during_total) if self.during_total else None


def exceedance_report(
    hourly: Mapping[str, Sequence[HourlyMetrics]],
    threshold: float = THRESHOLD_DB,
    split: PeriodSplit = DEFAULT_SPLIT,
    *,
    strict: bool = False,
) -> list[ExceedanceRow]:
    """Count hours whose average is strictly above ``threshold``, per period.

    Denominators are the hours that have data in each period, not calendar
    hours. Hours outside the analysis window are ignored. With
    ``strict=True`` low-coverage hours are left out of both counts and
    denominators. Stations without any in-window hour are skipped with a
    warning.
    """
    rows = []
    for sid in sorted(hourly, key=station_key):
        counts = {Period.PRE: 0, Period.DURING: 0}
        totals = {Period.PRE: 0, Period.DURING: 0}
        for h in hourly[sid]:
            if not split.contains(h.hour_start) or (strict and h.low_coverage):
                continue
            p = Period.PRE if h.hour_start < split.split_instant else Period.DURING
            totals[p] += 1
            if h.avg > threshold:
                counts[p] += 1
        if not any(totals.values()):
            log.warning("station %s has no hourly data in the analysis window; omitted", sid)
            continue
        rows.append(
            ExceedanceRow(sid, counts[Period.PRE], counts[Period.DURING], totals[Period.PRE], totals[Period.DURING])
        )
    return rows


@dataclass(frozen=True, slots=True)
class PeriodSummary:
    station_id: str
    pre_avg: float | None
    during_avg: float | None

    @property
    def reduction(self) -> float | None:
        if self.pre_avg is None or self.during_avg is None:
            return None
        return self.pre_avg - self.during_avg


def period_summary(
    hourly: Mapping[str, Sequence[HourlyMetrics]],
    split: PeriodSplit = DEFAULT_SPLIT,
    *,
    strict: bool = False,
) -> list[PeriodSummary]:
    """Energy average of the hourly averages in each period, per station.

    A period without data is reported as ``None`` (unavailable).
    """
    out = []
    for sid in sorted(hourly, key=station_key):
        vals: dict[Period, list[float]] = {Period.PRE: [], Period.DURING: []}
        for h in hourly[sid]:
            if not split.contains(h.hour_start) or (strict and h.low_coverage):
                continue
            p = Period.PRE if h.hour_start < split.split_instant else Period.DURING
            vals[p].append(h.avg)
        out.append(
            PeriodSummary(
                sid,
                _energy(vals[Period.PRE]) if vals[Period.PRE] else None,
                _energy(vals[Period.DURING]) if vals[Period.DURING] else None,
            )
        )
    return out
