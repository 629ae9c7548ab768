"""Spectral concentration: the sinc matrix, the Slepian window and spectra."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import check_p, check_positive_int, check_window
from .exceptions import ConvergenceError, InvalidParamsError

__all__ = [
    "SpectrumSamples",
    "build_q",
    "slepian",
    "concentration_ratio",
    "sidelobe_energy",
    "spectrum",
]


def _sinpi(t: np.ndarray) -> np.ndarray:
    """``sin(pi t)`` with exact zeros at integers."""
    r = t - 2.0 * np.round(t / 2.0)  # r in [-1, 1], same sine
    r = np.where(r > 0.5, 1.0 - r, r)
    r = np.where(r < -0.5, -1.0 - r, r)
    return np.sin(_pi(r.dtype) * r)


def _pi(dtype):
    # np.pi is a double; derive pi in the working precision
    return 4 * np.arctan(np.ones((), dtype=dtype))


def build_q(p: float, K: int, dtype=np.float64) -> np.ndarray:
    """Mainlobe-energy matrix for the band ``[-p/2, p/2]``.

    ``Q[l, l'] = sin(pi p (l - l')) / (pi (l - l'))`` with ``p`` on the
    diagonal, so that ``w @ Q @ w`` is the energy of the DTFT of ``w`` inside
    the band.  The matrix is built from its first column and is exactly
    symmetric Toeplitz; ``p = 1`` gives the identity exactly.  Pass
    ``dtype=np.longdouble`` for extended-precision energy evaluation.
    """
    p = check_p(p, allow_one=True)
    K = check_positive_int(K, "K", minimum=2)
    k = np.arange(1, K, dtype=dtype)
    col = np.empty(K, dtype=dtype)
    col[0] = p
    col[1:] = _sinpi(p * k) / (_pi(dtype) * k)
    return scipy.linalg.toeplitz(col)


def _slepian_tridiagonal(p: float, K: int) -> np.ndarray:
    # The symmetric tridiagonal matrix below commutes with build_q(p, K) and
    # has well separated eigenvalues, so its top eigenvector is the
    # principal eigenvector of Q even when Q's top eigenvalues coincide in
    # double precision.
    l = np.arange(K, dtype=np.float64)
    diag = ((K - 1 - 2 * l) / 2.0) ** 2 * np.cos(np.pi * p)
    off = l[1:] * (K - l[1:]) / 2.0
    try:
        _, vec = scipy.linalg.eigh_tridiagonal(
            diag, off, select="i", select_range=(K - 1, K - 1)
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"tridiagonal eigensolver failed: {exc}") from exc
    return vec[:, 0]


def _slepian_dense(p: float, K: int) -> np.ndarray:
    try:
        _, vec = scipy.linalg.eigh(build_q(p, K), subset_by_index=[K - 1, K - 1])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"dense eigensolver failed: {exc}") from exc
    return vec[:, 0]


def slepian(p: float, K: int, method: str = "tridiagonal") -> np.ndarray:
    """Unit-norm Slepian window: the principal eigenvector of ``build_q(p, K)``.

    Parameters
    ----------
    p : float
        Mainlobe proportion in ``(0, 1)``.
    K : int
        Window length.
    method : {"tridiagonal", "dense"}
        ``"tridiagonal"`` diagonalizes the commuting tridiagonal matrix and is
        accurate for all ``p``.  ``"dense"`` diagonalizes the sinc matrix
        directly; it loses accuracy once the top eigenvalues of the sinc
        matrix cluster near 1 (roughly ``K p > 8``).

    Returns
    -------
    w : ndarray, shape (K,)
        Symmetric window with positive coefficient sum.
    """
    p = check_p(p, allow_one=False)
    K = check_positive_int(K, "K", minimum=2)
    if method == "tridiagonal":
        w = _slepian_tridiagonal(p, K)
    elif method == "dense":
        w = _slepian_dense(p, K)
    else:
        raise ValueError(f"unknown method {method!r}")
    # the principal eigenvector is even; averaging with the reversal removes
    # the rounding-level odd part
    w = 0.5 * (w + w[::-1])
    w /= np.linalg.norm(w)
    if w.sum() < 0:
        w = -w
    return w


def _ratio(w, Q: np.ndarray):
    w = check_window(w, Q.shape[0]).astype(Q.dtype)
    ww = w @ w
    if ww == 0:
        raise ValueError("concentration ratio of the zero window is undefined")
    return (w @ Q @ w) / ww


def concentration_ratio(w, Q: np.ndarray) -> float:
    """Fraction of spectral energy inside the mainlobe, ``w Q w / w w``.

    The arithmetic uses the dtype of ``Q``.
    """
    return float(_ratio(w, Q))


def sidelobe_energy(w, Q: np.ndarray) -> float:
    """Fraction of spectral energy outside the mainlobe, ``1 - w Q w / w w``.

    The difference is formed in the dtype of ``Q`` before rounding, so with
    an extended-precision ``Q`` values far below machine epsilon resolve.
    """
    return float(1 - _ratio(w, Q))


@dataclass(frozen=True)
class SpectrumSamples:
    """Peak-normalized magnitude of the DTFT on a uniform grid.

    ``freqs`` is in cycles per sample on ``[-1/2, 1/2)``.
    """

    freqs: np.ndarray
    magnitudes_db: np.ndarray

    @property
    def freqs_nyquist(self) -> np.ndarray:
        """Frequencies scaled so that Nyquist is 1."""
        return 2.0 * self.freqs


# floor for log-magnitudes at exact spectral nulls
_MIN_DB = -400.0


def spectrum(w, num_points: int | None = None) -> SpectrumSamples:
    """Sample ``|sum_l w[l] exp(-2j pi f l)|`` at ``f = k / num_points - 1/2``.

    ``num_points`` defaults to ``16 K`` and must be at least ``K``.
    """
    w = check_window(w)
    K = w.shape[0]
    if num_points is None:
        num_points = 16 * K
    num_points = check_positive_int(num_points, "num_points")
    if num_points < K:
        raise InvalidParamsError(f"num_points={num_points} must be >= K={K}")
    k = np.arange(num_points)
    # modulation by (-1)^l shifts the FFT grid by half a turn
    mod = np.where(np.arange(K) % 2 == 0, 1.0, -1.0)
    mag = np.abs(np.fft.fft(w * mod, n=num_points))
    peak = mag.max()
    if peak == 0:
        raise ValueError("spectrum of the zero window is undefined")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    db = np.maximum(db, _MIN_DB)
    return SpectrumSamples(freqs=k / num_points - 0.5, magnitudes_db=db)
