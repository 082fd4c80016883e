"""Penalized Gaussian-likelihood change-point detection.

A split of ``y[0:n]`` after its first ``tau`` values is scored by

    C(y[0:tau]) + C(y[tau:n]) + penalty

where ``C`` is the negative maximized log-likelihood of a Normal with the
segment's own mean and variance,

    C = (m / 2) * (log(2 pi) + log(max(var_mle, var_floor)) + 1),

and ``penalty = n_params * log(n)`` (Schwarz/BIC). The split is kept only if
it beats the unsplit cost ``C(y[0:n])``. :func:`detect_multiple` minimizes
the same objective over any number of splits with pruned exact dynamic
programming, which runs in roughly linear time when changes are spread
through the series.

Convention: ``tau`` is the length of the first segment, so the first value
of the new regime is ``y[tau]`` (0-based).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import InsufficientDataError, check_series
from .model import HourlyMetrics, station_key

__all__ = [
    "MIN_SEGMENT_LENGTH",
    "N_PARAMS",
    "VAR_FLOOR",
    "Verdict",
    "SegmentStats",
    "ChangePointResult",
    "bic_penalty",
    "gaussian_cost",
    "detect_single",
    "detect_multiple",
    "segmentation_cost",
    "StationChange",
    "changepoint_report",
    "ChangePointDetector",
]

MIN_SEGMENT_LENGTH = 5
# location + one extra mean + one extra variance per change
N_PARAMS = 3
VAR_FLOOR = 1e-8
TIE_RTOL = 1e-10
_LOG_2PI = math.log(2.0 * math.pi)


class Verdict(str, enum.Enum):
    CHANGE = "change"
    NO_CHANGE = "no-change"

    def __str__(self) -> str:
        return self.value


def bic_penalty(n: int, n_params: int = N_PARAMS) -> float:
    return n_params * math.log(n)


class SegmentStats:
    """Prefix sums giving O(1) Gaussian cost of any segment.

    Data are shifted by their overall mean before accumulation to limit
    cancellation in ``sum(y^2) - sum(y)^2 / m``.
    """

    def __init__(self, y, var_floor: float = VAR_FLOOR):
        y = check_series(y, name="y")
        self.n = y.shape[0]
        self.var_floor = var_floor
        self._shift = float(y.mean()) if self.n else 0.0
        z = y - self._shift
        self.s1 = np.concatenate(([0.0], np.cumsum(z)))
        self.s2 = np.concatenate(([0.0], np.cumsum(z * z)))

    def mean(self, i: int, j: int) -> float:
        """Mean of ``y[i..j]`` inclusive."""
        m = j - i + 1
        return (self.s1[j + 1] - self.s1[i]) / m + self._shift

    def variance(self, i: int, j: int) -> float:
        """Maximum-likelihood (1/m) variance of ``y[i..j]`` inclusive."""
        return float(self._var(np.int64(i), np.int64(j + 1)))

    def _var(self, start, stop):
        m = stop - start
        s1 = self.s1[stop] - self.s1[start]
        s2 = self.s2[stop] - self.s2[start]
        return np.maximum(s2 / m - (s1 / m) ** 2, 0.0)

    def cost(self, start, stop):
        """Cost of half-open ``y[start:stop]``; accepts index arrays."""
        m = stop - start
        var = np.maximum(self._var(start, stop), self.var_floor)
        return 0.5 * m * (_LOG_2PI + np.log(var) + 1.0)


def gaussian_cost(stats: SegmentStats, i: int, j: int, min_segment_length: int = 1) -> float:
    """Negative maximized Normal log-likelihood of ``y[i..j]`` (inclusive)."""
    m = j - i + 1
    if i < 0 or j >= stats.n or m < max(1, min_segment_length):
        raise ValueError(
            f"segment [{i}, {j}] invalid for n={stats.n}, min_segment_length={min_segment_length}"
        )
    return float(stats.cost(np.int64(i), np.int64(j + 1)))


@dataclass
class ChangePointResult:
    """Outcome of a single change-point search.

    ``tau`` is ``None`` on a no-change verdict; ``best_tau`` always holds the
    minimizer of the penalized objective so the margin can be inspected.
    """

    n: int
    best_tau: int
    cost_left: float
    cost_right: float
    cost_unsplit: float
    penalty: float
    verdict: Verdict
    taus: np.ndarray = field(repr=False)
    objective: np.ndarray = field(repr=False)
    changed_at: datetime | None = None

    @property
    def tau(self) -> int | None:
        return self.best_tau if self.verdict is Verdict.CHANGE else None

    @property
    def split_objective(self) -> float:
        return self.cost_left + self.cost_right + self.penalty

    @property
    def gain(self) -> float:
        """Unsplit cost minus best penalized split cost (positive means change)."""
        return self.cost_unsplit - self.split_objective


def _check_length(n: int, min_segment_length: int) -> None:
    if min_segment_length < 1:
        raise ValueError("min_segment_length must be >= 1")
    if n < 2 * min_segment_length:
        raise InsufficientDataError(
            f"need at least {2 * min_segment_length} values for min_segment_length="
            f"{min_segment_length}, got {n}"
        )


def detect_single(
    y,
    *,
    min_segment_length: int = MIN_SEGMENT_LENGTH,
    n_params: int = N_PARAMS,
    penalty: float | None = None,
    var_floor: float = VAR_FLOOR,
) -> ChangePointResult:
    """Find the best single split of ``y`` under the penalized objective.

    Every ``tau`` with both segments at least ``min_segment_length`` long is
    scored; ties go to the smallest ``tau``. The verdict is no-change when
    the best penalized split cost is not below the unsplit cost.
    """
    y = check_series(y, name="y")
    n = y.shape[0]
    _check_length(n, min_segment_length)
    gamma = bic_penalty(n, n_params) if penalty is None else float(penalty)
    stats = SegmentStats(y, var_floor)

    taus = np.arange(min_segment_length, n - min_segment_length + 1)
    left = stats.cost(np.zeros_like(taus), taus)
    right = stats.cost(taus, np.full_like(taus, n))
    objective = left + right + gamma
    # values equal up to rounding count as tied; the smallest tau wins
    lo = float(objective.min())
    k = int(np.flatnonzero(objective <= lo + TIE_RTOL * max(1.0, abs(lo)))[0])
    unsplit = float(stats.cost(np.int64(0), np.int64(n)))
    verdict = Verdict.NO_CHANGE if objective[k] >= unsplit else Verdict.CHANGE
    return ChangePointResult(
        n=n,
        best_tau=int(taus[k]),
        cost_left=float(left[k]),
        cost_right=float(right[k]),
        cost_unsplit=unsplit,
        penalty=gamma,
        verdict=verdict,
        taus=taus,
        objective=objective,
    )


def detect_multiple(
    y,
    *,
    min_segment_length: int = MIN_SEGMENT_LENGTH,
    n_params: int = N_PARAMS,
    penalty: float | None = None,
    var_floor: float = VAR_FLOOR,
    prune: bool = True,
) -> list[int]:
    """Optimal change points under a per-change penalty, by pruned exact search.

    Minimizes ``sum(segment costs) + penalty * n_changes`` over every
    segmentation whose segments are all at least ``min_segment_length``
    long. Returns the sorted split positions (each the length of the prefix
    before the change).

    Pruning relies on splitting never raising the cost, which holds while
    segment variances stay above ``var_floor``. For near-constant data pass
    ``prune=False`` to run the plain quadratic dynamic program.
    """
    y = check_series(y, name="y")
    n = y.shape[0]
    _check_length(n, min_segment_length)
    gamma = bic_penalty(n, n_params) if penalty is None else float(penalty)
    stats = SegmentStats(y, var_floor)
    ms = min_segment_length

    best = np.full(n + 1, np.inf)
    best[0] = -gamma
    last = np.zeros(n + 1, dtype=np.int64)
    cands = np.array([0], dtype=np.int64)
    # candidates found dominated at time t stay usable until t + ms, since a
    # segment starting at t is not admissible before then
    expiry = np.array([np.iinfo(np.int64).max], dtype=np.int64)

    for t in range(ms, n + 1):
        live = expiry > t
        cands, expiry = cands[live], expiry[live]
        ok = t - cands >= ms
        if ok.any():
            s = cands[ok]
            base = best[s] + stats.cost(s, np.full_like(s, t))
            vals = base + gamma
            k = int(np.argmin(vals))
            best[t] = vals[k]
            last[t] = s[k]
            dominated = base > best[t] if prune else np.zeros_like(base, dtype=bool)
            idx = np.flatnonzero(ok)[dominated]
            expiry[idx] = np.minimum(expiry[idx], t + ms)
        if t + ms <= n and np.isfinite(best[t]):
            cands = np.append(cands, t)
            expiry = np.append(expiry, np.iinfo(np.int64).max)

    changes = []
    t = n
    while t > 0:
        t = int(last[t])
        if t > 0:
            changes.append(t)
    return sorted(changes)


def segmentation_cost(
    y,
    changes: Sequence[int],
    *,
    n_params: int = N_PARAMS,
    penalty: float | None = None,
    var_floor: float = VAR_FLOOR,
) -> float:
    """Penalized objective of a given segmentation of ``y``."""
    y = check_series(y, name="y")
    n = y.shape[0]
    gamma = bic_penalty(n, n_params) if penalty is None else float(penalty)
    stats = SegmentStats(y, var_floor)
    bounds = [0, *sorted(changes), n]
    total = sum(float(stats.cost(np.int64(a), np.int64(b))) for a, b in zip(bounds, bounds[1:]))
    return total + gamma * len(changes)


@dataclass
class StationChange:
    station_id: str
    result: ChangePointResult | None
    changes: list[datetime] = field(default_factory=list)
    error: str | None = None

    @property
    def changed_at(self) -> datetime | None:
        return self.result.changed_at if self.result is not None else None


def changepoint_report(
    hourly: Mapping[str, Sequence[HourlyMetrics]],
    *,
    multiple: bool = False,
    min_segment_length: int = MIN_SEGMENT_LENGTH,
    n_params: int = N_PARAMS,
    var_floor: float = VAR_FLOOR,
) -> list[StationChange]:
    """Detect the change in each station's hourly average series.

    ``tau`` is mapped to the ``hour_start`` of the first hour after the
    change. With ``multiple=True`` every change found by the pruned search
    is listed in ``changes`` as well. Stations whose series is too short are
    reported with an error and the others still run.
    """
    out = []
    opts = dict(min_segment_length=min_segment_length, n_params=n_params, var_floor=var_floor)
    for sid in sorted(hourly, key=station_key):
        hours = hourly[sid]
        y = [h.avg for h in hours]
        try:
            res = detect_single(y, **opts)
        except InsufficientDataError as exc:
            out.append(StationChange(sid, None, error=str(exc)))
            continue
        if res.verdict is Verdict.CHANGE:
            res.changed_at = hours[res.best_tau].hour_start
        row = StationChange(sid, res)
        if multiple:
            row.changes = [hours[k].hour_start for k in detect_multiple(y, **opts)]
        elif res.changed_at is not None:
            row.changes = [res.changed_at]
        out.append(row)
    return out


class ChangePointDetector(BaseEstimator):
    """Scikit-learn style change-point detector.

    Parameters
    ----------
    method : {"single", "multiple"}, default="single"
        Best single split, or the pruned exact search for any number.
    min_segment_length : int, default=5
    n_params : int, default=3
        Parameters charged per change in the BIC penalty.
    penalty : float, optional
        Explicit penalty overriding ``n_params * log(n)``.
    var_floor : float, default=1e-8
    prune : bool, default=True
        Candidate pruning in the multiple search; see :func:`detect_multiple`.

    Attributes
    ----------
    change_points_ : list of int
        Split positions (prefix lengths), sorted.
    result_ : ChangePointResult
        Single-split details; set for both methods.
    """

    def __init__(
        self,
        method: str = "single",
        min_segment_length: int = MIN_SEGMENT_LENGTH,
        n_params: int = N_PARAMS,
        penalty: float | None = None,
        var_floor: float = VAR_FLOOR,
        prune: bool = True,
    ):
        self.method = method
        self.min_segment_length = min_segment_length
        self.n_params = n_params
        self.penalty = penalty
        self.var_floor = var_floor
        self.prune = prune

    def fit(self, X, y=None):
        if self.method not in ("single", "multiple"):
            raise ValueError(f"unknown method {self.method!r}")
        series = np.asarray(X, dtype=float).reshape(-1)
        opts = dict(
            min_segment_length=self.min_segment_length,
            n_params=self.n_params,
            penalty=self.penalty,
            var_floor=self.var_floor,
        )
        self.result_ = detect_single(series, **opts)
        if self.method == "single":
            self.change_points_ = [] if self.result_.tau is None else [self.result_.tau]
        else:
            self.change_points_ = detect_multiple(series, prune=self.prune, **opts)
        self.n_samples_fit_ = series.shape[0]
        return self

    def predict(self, X=None):
        """Segment label of every point of the fitted series."""
        check_is_fitted(self, "change_points_")
        labels = np.zeros(self.n_samples_fit_, dtype=np.int64)
        for cp in self.change_points_:
            labels[cp:] += 1
        return labels

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()
