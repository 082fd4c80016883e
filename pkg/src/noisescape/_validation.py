"""Input validation shared by the numeric modules."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


class InsufficientDataError(ValueError):
    """Raised when a series is too short for the requested computation."""


def check_series(y, *, min_length: int = 1, name: str = "y") -> np.ndarray:
    """Return ``y`` as a finite 1-D float array of at least ``min_length``."""
    arr = check_array(
        y, ensure_2d=False, dtype=np.float64, ensure_all_finite=True,
        ensure_min_samples=0, input_name=name,
    )
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_length:
        raise InsufficientDataError(
            f"{name} needs at least {min_length} values, got {arr.shape[0]}"
        )
    return arr


def check_paired(x, y, *, min_length: int = 1, names=("t", "y")) -> tuple[np.ndarray, np.ndarray]:
    x = check_series(x, name=names[0])
    y = check_series(y, name=names[1])
    if x.shape != y.shape:
        raise ValueError(f"{names[0]} and {names[1]} lengths differ: {x.shape[0]} != {y.shape[0]}")
    if y.shape[0] < min_length:
        raise InsufficientDataError(
            f"need at least {min_length} points, got {y.shape[0]}"
        )
    return x, y
