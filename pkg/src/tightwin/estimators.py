"""scikit-learn style estimators wrapping window design and the Gabor transform.

``fit`` computes a window; ``transform`` maps signals of shape
``(n_signals, L)`` to coefficients of shape ``(n_signals, M, N)`` and
``inverse_transform`` synthesizes with the canonical dual window.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_window
from .gabor import GaborParams, canonical_tight, dgt, frame_operator_diag, idgt, is_tight
from .solver import SolverConfig, init_from_slepian, solve, solve_continuation
from .spectral import build_q, concentration_ratio, sidelobe_energy, slepian

__all__ = ["SlepianWindow", "CanonicalTightWindow", "TightWindowDesigner"]


class _GaborWindowBase(TransformerMixin, BaseEstimator):
    """Shared fit bookkeeping and the analysis/synthesis pair."""

    def _geometry(self, X) -> GaborParams:
        L = self.L
        if L is None and X is not None:
            L = np.asarray(X).shape[-1]
        return GaborParams.for_design(self.K, self.a, M=self.M, L=L)

    def _compute_window(self, params: GaborParams) -> np.ndarray:
        raise NotImplementedError

    def fit(self, X=None, y=None):
        """Compute the window.

        Parameters
        ----------
        X : array_like of shape (n_signals, L), optional
            Only its width is used, to set ``L`` when it was not given.
        y : ignored
        """
        self.params_ = self._geometry(X)
        w = self._compute_window(self.params_)
        self.window_ = w
        report = is_tight(w, self.params_)
        self.lambda_ = report.lam
        self.is_tight_ = report.tight
        Q = build_q(self.p, self.K, dtype=np.longdouble)
        self.concentration_ = concentration_ratio(w, Q)
        self.sidelobe_energy_ = sidelobe_energy(w, Q)
        self.dual_window_ = w / frame_operator_diag(w, self.params_)
        return self

    def _signals(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.params_.L:
            raise ValueError(f"expected signals of shape (n, {self.params_.L}), got {X.shape}")
        return X

    def transform(self, X):
        """Gabor coefficients, shape ``(n_signals, M, N)``."""
        check_is_fitted(self, "window_")
        X = self._signals(X)
        return np.stack([dgt(x, self.window_, self.params_) for x in X])

    def inverse_transform(self, C):
        """Signals from coefficients using the canonical dual window."""
        check_is_fitted(self, "window_")
        C = np.asarray(C)
        if C.ndim == 2:
            C = C[None]
        return np.stack([idgt(c, self.dual_window_, self.params_) for c in C])


class SlepianWindow(_GaborWindowBase):
    """Unit-norm Slepian window of mainlobe proportion ``p``.

    Parameters
    ----------
    p : float
        Mainlobe proportion in ``(0, 1)``.
    K, a : int
        Window length and hop.
    M, L : int, optional
        Channels (default ``K``) and signal length (default from ``X`` or ``4K``).
    """

    def __init__(self, p=0.1, K=64, a=16, M=None, L=None):
        self.p = p
        self.K = K
        self.a = a
        self.M = M
        self.L = L

    def _compute_window(self, params):
        return slepian(self.p, params.K)


class CanonicalTightWindow(_GaborWindowBase):
    """Canonical tight window obtained by rescaling the Slepian window."""

    def __init__(self, p=0.1, K=64, a=16, M=None, L=None):
        self.p = p
        self.K = K
        self.a = a
        self.M = M
        self.L = L

    def _compute_window(self, params):
        return canonical_tight(slepian(self.p, params.K), params.M / params.a, params)


class TightWindowDesigner(_GaborWindowBase):
    """Tight window with minimal sidelobe energy, by Riemannian Newton iteration.

    Parameters
    ----------
    p : float
        Mainlobe proportion in ``(0, 1)``.
    K, a : int
        Window length and hop; ``K`` must be a multiple of ``a``.
    M, L : int, optional
        Channels (default ``K``) and signal length (default from ``X`` or ``4K``).
    delta : float
        Gradient-norm stopping threshold.
    i_max : int
        Iteration cap.
    init : array_like of shape (K,) or "continuation", optional
        Starting window.  Defaults to the canonical tight Slepian window;
        ``"continuation"`` warm-starts along ``1/K, 2/K, ...`` up to ``p``,
        which avoids saddle points for larger ``K p``.
    warm_start : bool
        Start from the previous ``window_`` when refitting, e.g. after
        ``set_params(p=...)``.

    Attributes
    ----------
    window_ : ndarray of shape (K,)
        Designed window with frame constant ``M / a``.
    trace_ : SolverTrace
    n_iter_ : int
    status_ : Status

    Examples
    --------
    >>> est = TightWindowDesigner(p=4/64, K=64, a=16).fit()
    >>> est.status_.value
    'Converged'
    """

    def __init__(self, p=0.1, K=64, a=16, M=None, L=None, delta=1e-15, i_max=1000,
                 init=None, warm_start=False):
        self.p = p
        self.K = K
        self.a = a
        self.M = M
        self.L = L
        self.delta = delta
        self.i_max = i_max
        self.init = init
        self.warm_start = warm_start

    def _compute_window(self, params):
        cfg = SolverConfig(delta=self.delta, i_max=self.i_max)
        if self.warm_start and hasattr(self, "window_"):
            res = solve(self.window_, self.p, params, cfg)
        elif isinstance(self.init, str):
            if self.init != "continuation":
                raise ValueError(f"unknown init {self.init!r}")
            res = solve_continuation(self.p, params, cfg)
        else:
            if self.init is not None:
                w0 = check_window(self.init, params.K)
                w0 = canonical_tight(w0, params.M / params.a, params)
            else:
                w0 = init_from_slepian(self.p, params)
            res = solve(w0, self.p, params, cfg)
        self.trace_ = res.trace
        self.n_iter_ = res.trace.iterations
        self.status_ = res.trace.status
        return res.window
