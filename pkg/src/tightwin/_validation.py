"""Input validation helpers shared by the public functions and estimators."""
from __future__ import annotations

from fractions import Fraction
from numbers import Real

import numpy as np

from .exceptions import InvalidParamsError


def check_window(w, K: int | None = None, name: str = "window") -> np.ndarray:
    """Return ``w`` as a finite 1-D float64 array, optionally of length ``K``."""
    arr = np.asarray(w)
    if np.iscomplexobj(arr):
        raise ValueError(f"{name} must be real-valued")
    arr = arr.astype(np.float64, copy=False)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if K is not None and arr.shape[0] != K:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected K={K}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_signal(x, L: int) -> np.ndarray:
    arr = np.asarray(x).astype(np.complex128, copy=False)
    if arr.ndim != 1 or arr.shape[0] != L:
        raise ValueError(f"signal must have shape ({L},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal contains non-finite entries")
    return arr


def check_p(p, *, allow_one: bool = True) -> float:
    """Validate a mainlobe proportion.

    ``allow_one=False`` is used for design problems, where ``p = 1`` makes the
    objective constant.
    """
    if isinstance(p, Fraction):
        p = float(p)
    if not isinstance(p, Real) or isinstance(p, bool):
        raise InvalidParamsError(f"p must be a real number, got {p!r}")
    p = float(p)
    upper_ok = p <= 1.0 if allow_one else p < 1.0
    if not (0.0 < p and upper_ok):
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise InvalidParamsError(f"p must lie in {interval}, got {p}")
    return p


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidParamsError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidParamsError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
