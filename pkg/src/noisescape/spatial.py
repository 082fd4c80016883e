"""Great-circle radius joins and the noise-versus-traffic regression."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TypeVar

import numpy as np

from ._validation import InsufficientDataError, check_paired
from .ingest import SchoolPoint, TrafficPoint
from .model import GeoPoint, Station, TimeBand
from .trend import DegenerateDesignError, ols_fit

__all__ = [
    "EARTH_RADIUS_M",
    "RADIUS_M",
    "StationTraffic",
    "FitSummary",
    "haversine_m",
    "points_within",
    "station_traffic",
    "school_count",
    "noise_traffic_fit",
    "grouped_fits",
]

# mean Earth radius (IUGG); a sphere is plenty for 500 m neighbourhoods
EARTH_RADIUS_M = 6_371_008.8
RADIUS_M = 500.0

P = TypeVar("P")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in metres between two points."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def _loc(p) -> GeoPoint:
    return p if isinstance(p, GeoPoint) else p.location


def points_within(center: GeoPoint, points: Iterable[P], radius: float = RADIUS_M) -> list[P]:
    """Points whose distance to ``center`` is at most ``radius`` (inclusive).

    Accepts bare :class:`GeoPoint` objects or anything with a ``location``.
    Input order is preserved. A linear scan is adequate for city-scale
    point sets.
    """
    return [p for p in points if haversine_m(center, _loc(p)) <= radius]


@dataclass(frozen=True, slots=True)
class StationTraffic:
    station_id: str
    mean_count: dict[TimeBand, float] | None
    n_points_in_radius: int

    @property
    def has_data(self) -> bool:
        return self.n_points_in_radius > 0


def station_traffic(
    stations: Sequence[Station], traffic: Sequence[TrafficPoint], radius: float = RADIUS_M
) -> list[StationTraffic]:
    """Arithmetic mean per band of the detector counts around each station.

    Stations without a detector in range get ``mean_count=None``: absent
    traffic data is not zero traffic.
    """
    out = []
    for st in stations:
        near = points_within(st.location, traffic, radius)
        if not near:
            out.append(StationTraffic(st.station_id, None, 0))
            continue
        means = {band: math.fsum(p.counts[band] for p in near) / len(near) for band in TimeBand}
        out.append(StationTraffic(st.station_id, means, len(near)))
    return out


def school_count(
    stations: Sequence[Station], schools: Sequence[SchoolPoint], radius: float = RADIUS_M
) -> dict[str, int]:
    return {st.station_id: len(points_within(st.location, schools, radius)) for st in stations}


@dataclass(frozen=True, slots=True)
class FitSummary:
    slope: float
    intercept: float
    r_squared: float
    n: int


def noise_traffic_fit(traffic, noise) -> FitSummary:
    """Least-squares line of noise (dB) on mean traffic count, with R².

    ``R² = 1 - RSS / TSS``; a constant response gives ``R² = 0``.

    Raises
    ------
    InsufficientDataError
        Fewer than three points.
    DegenerateDesignError
        No variance in traffic.
    """
    x, y = check_paired(traffic, noise, min_length=3, names=("traffic", "noise"))
    fit = ols_fit(y, x)
    resid = y - (fit.intercept + fit.slope * x)
    rss = float(resid @ resid)
    dy = y - y.mean()
    tss = float(dy @ dy)
    # relative test so a constant response with rounding noise still gives 0
    flat = tss <= (1e-12 * max(1.0, float(np.max(np.abs(y))))) ** 2 * y.shape[0]
    r2 = 0.0 if flat else min(1.0, max(0.0, 1.0 - rss / tss))
    return FitSummary(fit.slope, fit.intercept, r2, int(y.shape[0]))


def grouped_fits(
    rows: Iterable[tuple[str, TimeBand, float, float]],
    groups: Mapping[str, str] | None = None,
) -> dict[tuple[TimeBand, str], FitSummary | None]:
    """Noise-traffic fit for every ``(band, group)``.

    ``rows`` holds ``(station_id, band, mean_traffic, mean_noise)``.
    Stations missing from ``groups`` fall in group ``"all"``. Fits that
    cannot be computed are ``None``.
    """
    groups = groups or {}
    buckets: dict[tuple[TimeBand, str], list[tuple[float, float]]] = {}
    for sid, band, tr, nz in rows:
        buckets.setdefault((TimeBand(band), groups.get(sid, "all")), []).append((tr, nz))
    out = {}
    for key in sorted(buckets, key=lambda k: (list(TimeBand).index(k[0]), k[1])):
        pts = np.array(buckets[key])
        try:
            out[key] = noise_traffic_fit(pts[:, 0], pts[:, 1])
        except (InsufficientDataError, DegenerateDesignError):
            out[key] = None
    return out

