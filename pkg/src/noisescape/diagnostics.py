"""Linearity check from the cross-correlation of a series with its square.

For the centered series ``u = y - mean(y)`` and ``w = u**2``::

    phi(k) = sum_{t < N-k} (u[t] - mean u) (w[t+k] - mean w)
             / ( sqrt(sum (u - mean u)**2) * sqrt(sum (w - mean w)**2) )

The denominator uses sums of *squared* deviations over the full series so
that ``|phi| <= 1`` by Cauchy-Schwarz. A linear (Gaussian-like) process has
``phi(k) ~ 0`` for every lag; values outside ``+-1.96 / sqrt(N)`` point to
nonlinearity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import InsufficientDataError, check_series

__all__ = [
    "MAX_LAG",
    "MIN_LENGTH",
    "Linearity",
    "UndefinedDiagnosticError",
    "LinearityDiagnostic",
    "center",
    "phi",
    "phi_all",
    "linearity_test",
    "LinearityTest",
]

MAX_LAG = 50
MIN_LENGTH = 30
Z_95 = 1.96
# share of lags allowed outside the band in "fraction" mode
OUTSIDE_FRACTION = 0.05


class Linearity(str, enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"

    def __str__(self) -> str:
        return self.value


class UndefinedDiagnosticError(ValueError):
    """The centered series or its square has zero variance."""


@dataclass(frozen=True)
class LinearityDiagnostic:
    phi: np.ndarray
    bound: float
    verdict: Linearity
    n: int
    mode: str = "strict"

    @property
    def inside(self) -> np.ndarray:
        return np.abs(self.phi) <= self.bound

    @property
    def fraction_inside(self) -> float:
        return float(self.inside.mean())


def center(y) -> np.ndarray:
    """Subtract the sample mean."""
    y = check_series(y, min_length=2, name="y")
    return y - y.mean()


def _flat(x: np.ndarray) -> bool:
    return float(np.ptp(x)) <= 1e-12 * float(np.max(np.abs(x)))


def phi_all(y_centered, max_lag: int = MAX_LAG) -> np.ndarray:
    """``phi(k)`` for ``k = 0..max_lag``."""
    u = check_series(y_centered, min_length=2, name="y_centered")
    n = u.shape[0]
    if not 0 <= max_lag <= n - 2:
        raise ValueError(f"lag must lie in [0, {n - 2}], got {max_lag}")
    du = u - u.mean()
    w = u * u
    dw = w - w.mean()
    if _flat(u) or _flat(w):
        raise UndefinedDiagnosticError(
            "cross-correlation undefined: the centered series or its square is constant"
        )
    su, sw = math.sqrt(float(du @ du)), math.sqrt(float(dw @ dw))
    num = np.array([du[: n - k] @ dw[k:] for k in range(max_lag + 1)])
    return num / (su * sw)


def phi(y_centered, lag: int) -> float:
    """``phi`` at a single lag."""
    u = check_series(y_centered, min_length=2, name="y_centered")
    if not 0 <= lag <= u.shape[0] - 2:
        raise ValueError(f"lag must lie in [0, {u.shape[0] - 2}], got {lag}")
    return float(phi_all(u, lag)[lag])


def _verdict(values: np.ndarray, bound: float, mode: str) -> Linearity:
    outside = int(np.count_nonzero(np.abs(values) > bound))
    if mode == "strict":
        ok = outside == 0
    elif mode == "fraction":
        ok = outside <= OUTSIDE_FRACTION * values.shape[0]
    else:
        raise ValueError(f"mode must be 'strict' or 'fraction', got {mode!r}")
    return Linearity.LINEAR if ok else Linearity.NONLINEAR


def linearity_test(y, max_lag: int = MAX_LAG, *, mode: str = "strict") -> LinearityDiagnostic:
    """Cross-correlation linearity check over lags ``0..max_lag``.

    Parameters
    ----------
    y : array_like
        Series of at least ``max(30, max_lag + 2)`` values.
    max_lag : int, default=50
    mode : {"strict", "fraction"}
        ``"strict"``: linear only if every ``|phi|`` is within the bound.
        ``"fraction"``: linear if at most 5% of lags fall outside it.

    Raises
    ------
    InsufficientDataError
        Series too short for the lag range or the large-sample bound.
    UndefinedDiagnosticError
        Degenerate (constant) centered series or square.
    """
    y = check_series(y, name="y")
    n = y.shape[0]
    need = max(MIN_LENGTH, max_lag + 2)
    if n < need:
        raise InsufficientDataError(f"linearity test needs at least {need} values, got {n}")
    values = phi_all(center(y), max_lag)
    bound = Z_95 / math.sqrt(n)
    return LinearityDiagnostic(values, bound, _verdict(values, bound, mode), n, mode)


class LinearityTest(BaseEstimator):
    """Estimator form of :func:`linearity_test`.

    Attributes
    ----------
    phi_ : ndarray of shape (max_lag + 1,)
    bound_ : float
    verdict_ : Linearity
    """

    def __init__(self, max_lag: int = MAX_LAG, mode: str = "strict"):
        self.max_lag = max_lag
        self.mode = mode

    def fit(self, X, y=None):
        diag = linearity_test(np.asarray(X, dtype=float).reshape(-1), self.max_lag, mode=self.mode)
        self.diagnostic_ = diag
        self.phi_ = diag.phi
        self.bound_ = diag.bound
        self.verdict_ = diag.verdict
        return self

    def predict(self, X=None):
        check_is_fitted(self, "verdict_")
        return self.verdict_
