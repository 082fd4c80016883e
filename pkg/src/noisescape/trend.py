"""Ordinary least squares trend with a two-sided slope t-test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._special import t_two_sided_p
from ._validation import InsufficientDataError, check_paired, check_series
from .aggregate import BandDailySeries
from .model import DEFAULT_BANDS, BandScheme, HourlyMetrics, TimeBand, band_of, station_key

__all__ = [
    "ALPHA",
    "METRICS",
    "DegenerateDesignError",
    "TrendResult",
    "ols_fit",
    "band_trends",
    "hourly_band_trends",
    "GRANULARITIES",
    "LinearTrend",
]

ALPHA = 0.05
METRICS = ("avg", "max", "min")
GRANULARITIES = ("band-daily", "hourly")


class DegenerateDesignError(ValueError):
    """All time indices are identical, so the slope is not identifiable."""


@dataclass(frozen=True, slots=True)
class TrendResult:
    slope: float
    intercept: float
    slope_se: float
    t_stat: float
    p_value: float
    significant: bool
    n: int
    exact_fit: bool = False

    @property
    def decreasing(self) -> bool:
        return self.slope < 0


def ols_fit(y, t=None, *, alpha: float = ALPHA) -> TrendResult:
    """Fit ``y = intercept + slope * t`` by least squares.

    Parameters
    ----------
    y : array_like
        Response values, at least 3.
    t : array_like, optional
        Time indices; defaults to ``1..n``.
    alpha : float
        Two-sided significance level.

    Returns
    -------
    TrendResult
        The p-value is the two-sided Student t tail with ``n - 2`` degrees
        of freedom. A zero-residual fit is flagged ``exact_fit`` and gets a
        p-value of 0 (or 1 when the fitted slope is itself zero).

    Raises
    ------
    InsufficientDataError
        Fewer than three points.
    DegenerateDesignError
        Zero variance in ``t``.
    """
    if t is None:
        y = check_series(y, name="y")
        t = np.arange(1, y.shape[0] + 1, dtype=float)
    t, y = check_paired(t, y, min_length=3)
    n = y.shape[0]
    t_bar, y_bar = t.mean(), y.mean()
    dt = t - t_bar
    sxx = float(dt @ dt)
    if sxx <= 0.0:
        raise DegenerateDesignError("time indices have zero variance")
    slope = float(dt @ (y - y_bar)) / sxx
    intercept = float(y_bar - slope * t_bar)
    resid = y - (intercept + slope * t)
    rss = float(resid @ resid)
    dof = n - 2

    scale = max(float(np.max(np.abs(y))), 1.0)
    if rss <= (1e-12 * scale) ** 2 * n:
        flat = abs(slope) * float(np.ptp(t)) <= 1e-12 * scale
        if flat:
            slope = 0.0
        return TrendResult(
            slope=slope,
            intercept=intercept,
            slope_se=0.0,
            t_stat=0.0 if flat else math.copysign(math.inf, slope),
            p_value=1.0 if flat else 0.0,
            significant=not flat,
            n=n,
            exact_fit=True,
        )

    se = math.sqrt(rss / dof / sxx)
    t_stat = slope / se
    p = t_two_sided_p(t_stat, dof)
    return TrendResult(slope, intercept, se, t_stat, p, p < alpha, n)


def band_trends(
    series: Mapping[tuple[str, TimeBand], BandDailySeries],
    *,
    alpha: float = ALPHA,
) -> dict[tuple[str, TimeBand, str], TrendResult | None]:
    """One trend per ``(station, band, metric)`` over the band-daily series.

    Slopes are in dB per day. Cells with fewer than three days are ``None``
    (unavailable) and do not stop the run.
    """
    out: dict[tuple[str, TimeBand, str], TrendResult | None] = {}
    for (sid, band), s in sorted(series.items(), key=lambda kv: (station_key(kv[0][0]), list(TimeBand).index(kv[0][1]))):
        days = s.day_index()
        for metric in METRICS:
            try:
                out[(sid, band, metric)] = ols_fit(s.values(metric), days, alpha=alpha)
            except (InsufficientDataError, DegenerateDesignError):
                out[(sid, band, metric)] = None
    return out


def hourly_band_trends(
    hourly: Mapping[str, Sequence[HourlyMetrics]],
    *,
    alpha: float = ALPHA,
    bands: BandScheme = DEFAULT_BANDS,
) -> dict[tuple[str, TimeBand, str], TrendResult | None]:
    """Like :func:`band_trends` but fitted to the in-band hourly points.

    The time index is hours since the station's first hour, so slopes are
    in dB per hour. ``max`` and ``min`` use each hour's own extrema.
    """
    out: dict[tuple[str, TimeBand, str], TrendResult | None] = {}
    for sid, hours in sorted(hourly.items(), key=lambda kv: station_key(kv[0])):
        t0 = hours[0].hour_start if hours else None
        for band in TimeBand:
            pts = [h for h in hours if band_of(h.hour_start, bands) is band]
            t = np.array([(h.hour_start - t0).total_seconds() / 3600.0 for h in pts])
            for metric in METRICS:
                y = np.array([getattr(h, metric) for h in pts], dtype=float)
                try:
                    out[(sid, band, metric)] = ols_fit(y, t, alpha=alpha)
                except (InsufficientDataError, DegenerateDesignError):
                    out[(sid, band, metric)] = None
    return out


class LinearTrend(RegressorMixin, BaseEstimator):
    """Scikit-learn style wrapper around :func:`ols_fit`.

    ``X`` is the time index, either 1-D or a single column.

    Attributes
    ----------
    coef_ : ndarray of shape (1,)
    intercept_ : float
    result_ : TrendResult
    """

    def __init__(self, alpha: float = ALPHA):
        self.alpha = alpha

    def fit(self, X, y):
        t = np.asarray(X, dtype=float).reshape(-1)
        self.result_ = ols_fit(y, t, alpha=self.alpha)
        self.coef_ = np.array([self.result_.slope])
        self.intercept_ = self.result_.intercept
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        t = np.asarray(X, dtype=float).reshape(-1)
        return self.intercept_ + self.coef_[0] * t
