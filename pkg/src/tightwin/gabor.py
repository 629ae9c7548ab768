"""Discrete Gabor transform with a real window, and tightness utilities.

The transform uses a hop of ``a`` samples, a window of ``K`` samples and
``M`` frequency channels on a periodic signal of ``L`` samples.  Because
``a < K <= M``, the frame operator is diagonal, so tightness reduces to
equal energy across the residue classes of the window modulo ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_positive_int, check_signal, check_window
from .exceptions import InvalidParamsError, NotTightError, ZeroFrameDiagonalError

__all__ = [
    "GaborParams",
    "TightnessReport",
    "dgt",
    "idgt",
    "frame_operator_diag",
    "canonical_tight",
    "is_tight",
    "verify_reconstruction",
    "residue_energies",
]

DEFAULT_TIGHT_TOL = 1e-10
# residue-class energies at or below this fraction of the largest count as zero
_ZERO_DIAG_REL = 1e-30


@dataclass(frozen=True)
class GaborParams:
    """Lattice geometry of the transform.

    Parameters
    ----------
    L : int
        Signal length.
    K : int
        Window length.
    a : int
        Time shift (hop).
    M : int
        Number of frequency channels.

    Both ``L`` and ``K`` must be multiples of ``a`` and ``0 < a < K <= M <= L``.
    """

    L: int
    K: int
    a: int
    M: int

    def __post_init__(self):
        for name in ("L", "K", "a", "M"):
            check_positive_int(getattr(self, name), name)
        L, K, a, M = self.L, self.K, self.a, self.M
        if not (0 < a < K <= M <= L):
            raise InvalidParamsError(
                f"require 0 < a < K <= M <= L, got a={a}, K={K}, M={M}, L={L}"
            )
        if L % a:
            raise InvalidParamsError(f"L={L} is not a multiple of a={a}")
        if K % a:
            raise InvalidParamsError(f"K={K} is not a multiple of a={a}")

    @property
    def N(self) -> int:
        """Number of frames, ``L / a``."""
        return self.L // self.a

    @property
    def J(self) -> int:
        """Samples per residue class, ``K / a``."""
        return self.K // self.a

    @classmethod
    def for_design(cls, K: int, a: int, M: int | None = None, L: int | None = None):
        """Geometry for window design, where the signal length is irrelevant.

        Defaults are ``M = K`` and ``L = 4K`` (raised to a multiple of ``a``
        no smaller than ``M`` when needed).
        """
        M = K if M is None else M
        if L is None:
            L = max(4 * K, M)
            L = -(-L // a) * a if a > 0 else L
        return cls(L=L, K=K, a=a, M=M)


class TightnessReport(NamedTuple):
    tight: bool
    lam: float
    max_deviation: float


def _frames(x: np.ndarray, params: GaborParams) -> np.ndarray:
    l = np.arange(params.K)[:, None]
    n = np.arange(params.N)[None, :]
    return x[(l + params.a * n) % params.L]


def dgt(x, w, params: GaborParams) -> np.ndarray:
    """Discrete Gabor transform of a periodic signal.

    Returns
    -------
    X : ndarray of complex, shape (M, N)
        ``X[m, n] = sum_l x[(l + a n) mod L] w[l] exp(-2j pi m l / M)``.
    """
    x = check_signal(x, params.L)
    w = check_window(w, params.K)
    # windowed frames are zero-padded from K to M by the FFT
    return np.fft.fft(_frames(x, params) * w[:, None], n=params.M, axis=0)


def idgt(X, gamma, params: GaborParams) -> np.ndarray:
    """Inverse transform with synthesis window ``gamma``.

    Frames with negative index wrap to ``N - n``; with the support of frame
    ``n`` being ``[a n, a n + K)`` modulo ``L`` this is an overlap-add.
    """
    X = np.asarray(X).astype(np.complex128, copy=False)
    if X.shape != (params.M, params.N):
        raise ValueError(f"coefficients must have shape {(params.M, params.N)}, got {X.shape}")
    gamma = check_window(gamma, params.K, name="gamma")
    # every wrapped index -n must be a valid frame
    assert (params.K - 1) // params.a <= params.N - 1
    # sum_m X[m, n] exp(2j pi m k / M) for k = l - a n in [0, K)
    frames = params.M * np.fft.ifft(X, axis=0)[: params.K, :] * gamma[:, None]
    out = np.zeros(params.L, dtype=np.complex128)
    l = np.arange(params.K)[:, None]
    n = np.arange(params.N)[None, :]
    np.add.at(out, (l + params.a * n) % params.L, frames)
    return out


def residue_energies(w, params: GaborParams) -> np.ndarray:
    """``M * ||w_l||^2`` for each residue class ``l`` in ``[0, a)``."""
    w = check_window(w, params.K)
    return params.M * np.sum(w.reshape(params.J, params.a) ** 2, axis=0)


def frame_operator_diag(w, params: GaborParams) -> np.ndarray:
    """Diagonal of the (diagonal) frame operator, length ``K``.

    Entry ``l`` sums ``M w[l + a n]^2`` over all in-range shifts of ``l``,
    which is the energy of the residue class of ``l``.
    """
    e = residue_energies(w, params)
    return np.tile(e, params.J)


def canonical_tight(w, lam: float, params: GaborParams) -> np.ndarray:
    """Rescale ``w`` entrywise to a tight window with frame constant ``lam``.

    Raises
    ------
    ZeroFrameDiagonalError
        If some residue class of ``w`` has (numerically) zero energy.
    """
    if not lam > 0:
        raise InvalidParamsError(f"lambda must be positive, got {lam}")
    w = check_window(w, params.K)
    s = frame_operator_diag(w, params)
    zero = s <= _ZERO_DIAG_REL * s.max()
    if np.any(zero):
        bad = sorted({int(i) % params.a for i in np.flatnonzero(zero)})
        raise ZeroFrameDiagonalError(f"residue classes {bad} have zero energy")
    return np.sqrt(lam) * w / np.sqrt(s)


def is_tight(w, params: GaborParams, tol: float = DEFAULT_TIGHT_TOL) -> TightnessReport:
    """Check equal residue-class energy up to relative tolerance ``tol``.

    The reported ``lam`` is the mean energy and ``max_deviation`` is the
    largest relative departure from it.
    """
    e = residue_energies(w, params)
    lam = float(e.mean())
    if lam <= 0:
        return TightnessReport(False, lam, float("inf"))
    dev = float(np.max(np.abs(e - lam)) / lam)
    return TightnessReport(dev <= tol, lam, dev)


def verify_reconstruction(
    w, params: GaborParams, trials: int = 10, seed: int = 0, tol: float = DEFAULT_TIGHT_TOL
) -> float:
    """Largest relative round-trip error of analysis/synthesis with ``w`` and ``w / lam``.

    Raises
    ------
    NotTightError
        If ``w`` fails :func:`is_tight` at ``tol``.
    """
    w = check_window(w, params.K)
    report = is_tight(w, params, tol)
    if not report.tight:
        raise NotTightError(
            f"window is not tight: relative deviation {report.max_deviation:.3e} > {tol:.1e}"
        )
    rng = np.random.default_rng(seed)
    gamma = w / report.lam
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(params.L) + 1j * rng.standard_normal(params.L)
        y = idgt(dgt(x, w, params), gamma, params)
        worst = max(worst, float(np.linalg.norm(y - x) / np.linalg.norm(x)))
    return worst
