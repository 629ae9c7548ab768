"""Geometry of tight windows as a product of spheres.

A length-``K`` window is stride-sorted into ``a`` blocks
``w_l = (w[l], w[l+a], ..., w[l+a(J-1)])``.  Tight windows normalized to
frame constant ``M / a`` are exactly the sorted vectors whose blocks all
have norm ``1 / sqrt(a)``.  The cost minimized on that set is
``h(w) = -1/2 w @ Qt @ w`` with ``Qt`` the sorted concentration matrix.

Sorted windows and tangent vectors are plain 1-D arrays of length ``K``;
functions take the block count ``a`` explicitly.
"""
from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .exceptions import (
    InvalidParamsError,
    NotTangentError,
    OffManifoldError,
    SingularSystemError,
    StaleSystemError,
    ZeroBlockError,
)
from .spectral import build_q

__all__ = [
    "NewtonSystem",
    "sort_permutation",
    "sort_window",
    "unsort_window",
    "permute_q",
    "sorted_q",
    "check_on_manifold",
    "project_tangent",
    "build_system",
    "objective",
    "riemannian_gradient",
    "hessian_apply",
    "newton_step",
    "newton_step_mil",
    "retract",
]

MANIFOLD_TOL = 1e-12
TANGENT_TOL = 1e-10
ZERO_BLOCK_TOL = 1e-14
# iterative refinement is applied above this relative residual
REFINE_THRESHOLD = 1e-12
MAX_REFINE_STEPS = 1
# normwise backward error above which the Newton solve is rejected
BACKWARD_ERROR_TOL = 1e-10
_XP = np.longdouble


def _split(K: int, a: int) -> int:
    if a < 1 or K % a:
        raise InvalidParamsError(f"K={K} is not a multiple of a={a}")
    return K // a


def sort_permutation(K: int, a: int) -> np.ndarray:
    """Index map ``perm`` with ``sorted = w[perm]``."""
    J = _split(K, a)
    return np.arange(K).reshape(J, a).T.ravel()


def sort_window(w, a: int) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    J = _split(w.shape[0], a)
    return np.ascontiguousarray(w.reshape(J, a).T).ravel()


def unsort_window(wt, a: int) -> np.ndarray:
    wt = np.asarray(wt, dtype=np.float64)
    J = _split(wt.shape[0], a)
    return np.ascontiguousarray(wt.reshape(a, J).T).ravel()


def permute_q(Q: np.ndarray, a: int) -> np.ndarray:
    """Sort rows and columns of ``Q`` so that ``w Q w == sort(w) Qt sort(w)``."""
    perm = sort_permutation(Q.shape[0], a)
    return Q[np.ix_(perm, perm)]


@lru_cache(maxsize=32)
def sorted_q(p: float, K: int, a: int) -> np.ndarray:
    """Cached, read-only sorted concentration matrix."""
    Qt = permute_q(build_q(p, K), a)
    Qt.setflags(write=False)
    return Qt


def _blocks(wt: np.ndarray, a: int) -> np.ndarray:
    return wt.reshape(a, -1)


def check_on_manifold(wt, a: int, tol: float = MANIFOLD_TOL) -> np.ndarray:
    """Return ``wt`` as an array after checking every block has norm ``1/sqrt(a)``."""
    wt = np.asarray(wt, dtype=np.float64)
    _split(wt.shape[0], a)
    dev = np.abs(np.sqrt(a) * np.linalg.norm(_blocks(wt, a), axis=1) - 1.0)
    if not np.all(dev <= tol):
        raise OffManifoldError(f"block norms deviate from 1/sqrt(a) by up to {dev.max():.3e}")
    return wt


def _check_tangent(wt: np.ndarray, v: np.ndarray, a: int, tol: float = TANGENT_TOL) -> None:
    inner = np.abs(np.sum(_blocks(wt, a) * _blocks(v, a), axis=1))
    # block l of wt has norm 1/sqrt(a)
    if np.any(inner > tol * max(np.linalg.norm(v), 1e-300) / np.sqrt(a)):
        raise NotTangentError(f"vector is not tangent: max |w_l . v_l| = {inner.max():.3e}")


def _project(wt: np.ndarray, u: np.ndarray, a: int) -> np.ndarray:
    B = _blocks(wt, a)
    U = _blocks(u, a)
    return (U - a * np.sum(B * U, axis=1, keepdims=True) * B).ravel()


def project_tangent(wt, u, a: int) -> np.ndarray:
    """Orthogonal projection ``(I - a W W^T) u`` onto the tangent space at ``wt``."""
    wt = check_on_manifold(wt, a)
    u = np.asarray(u, dtype=np.float64)
    if u.shape != wt.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {wt.shape}")
    return _project(wt, u, a)


def _digest(wt: np.ndarray) -> str:
    return hashlib.blake2b(np.ascontiguousarray(wt).tobytes(), digest_size=16).hexdigest()


@dataclass(frozen=True)
class NewtonSystem:
    """Quantities of one Newton iteration, tied to the point they were built at.

    Attributes
    ----------
    U : ndarray, shape (K, K)
        ``Qt - a * blockdiag(h_l I_J)``.
    h : ndarray, shape (a,)
        Block couplings ``h_l = w_l . q_l`` with ``q = Qt @ wt``.
    grad : ndarray, shape (K,)
        Riemannian gradient ``-U wt``, accumulated in extended precision.
    Qtilde : ndarray, shape (K, K)
        Sorted concentration matrix.
    base : ndarray, shape (K,)
        The sorted window the system was built at.
    a : int
    digest : str
        Content hash of ``base``.
    """

    U: np.ndarray
    h: np.ndarray
    grad: np.ndarray
    Qtilde: np.ndarray
    base: np.ndarray
    a: int
    digest: str

    @property
    def W(self) -> np.ndarray:
        """Block-diagonal ``K x a`` matrix with the blocks of ``base`` as columns."""
        a = self.a
        J = self.base.shape[0] // a
        W = np.zeros((self.base.shape[0], a))
        for l in range(a):
            W[l * J:(l + 1) * J, l] = self.base[l * J:(l + 1) * J]
        return W

    def check(self, wt) -> None:
        if _digest(np.asarray(wt, dtype=np.float64)) != self.digest:
            raise StaleSystemError("Newton system was built at a different point")

    def newton_matrix(self) -> np.ndarray:
        """``U - a W W^T Qt``, the matrix inverted by the Newton step."""
        a = self.a
        K = self.base.shape[0]
        B = _blocks(self.base, a)
        # row block l of W^T Qt is w_l^T Qt[block l, :]
        R = np.einsum("lj,ljk->lk", B, self.Qtilde.reshape(a, -1, K))
        return self.U - a * (B[:, :, None] * R[:, None, :]).reshape(K, K)

    def dump_csv(self, path) -> None:
        """Write ``U`` as CSV (debug aid)."""
        np.savetxt(path, self.U, delimiter=",", fmt="%.17g")


def build_system(wt, Qt: np.ndarray, a: int) -> NewtonSystem:
    wt = np.array(wt, dtype=np.float64)
    wt.setflags(write=False)
    J = wt.shape[0] // a
    # q, h and the gradient cancel heavily near a solution
    w_x = wt.astype(_XP)
    q_x = Qt.astype(_XP) @ w_x
    h_x = np.sum(_blocks(w_x, a) * _blocks(q_x, a), axis=1)
    grad = -(q_x - a * np.repeat(h_x, J) * w_x)
    h = h_x.astype(np.float64)
    U = np.array(Qt, dtype=np.float64)
    U[np.diag_indices_from(U)] -= a * np.repeat(h, J)
    return NewtonSystem(
        U=U, h=h, grad=grad.astype(np.float64), Qtilde=Qt, base=wt, a=a, digest=_digest(wt)
    )


def objective(wt, Qt: np.ndarray) -> float:
    """``h(wt) = -1/2 wt @ Qt @ wt``."""
    wt = np.asarray(wt, dtype=np.float64)
    return -0.5 * float(wt @ Qt @ wt)


def riemannian_gradient(wt, sys: NewtonSystem) -> np.ndarray:
    """Riemannian gradient ``-U wt`` of the cost at ``wt``."""
    sys.check(wt)
    return sys.grad.copy()


def hessian_apply(wt, sys: NewtonSystem, v) -> np.ndarray:
    """Riemannian Hessian applied to a tangent vector: ``-(U - a W W^T Qt) v``."""
    sys.check(wt)
    v = np.asarray(v, dtype=np.float64)
    a = sys.a
    _check_tangent(sys.base, v, a)
    B = _blocks(sys.base, a)
    Qv = _blocks(sys.Qtilde @ v, a)
    corr = a * np.sum(B * Qv, axis=1, keepdims=True) * B
    return -(sys.U @ v) + corr.ravel()


def newton_step(
    wt, sys: NewtonSystem, refine: bool = True, stats: dict | None = None
) -> np.ndarray:
    """Newton direction ``(U - a W W^T Qt)^{-1} g`` as a tangent vector.

    The full ``K x K`` system is solved by pivoted LU.  When ``refine`` is set
    and the relative residual exceeds ``REFINE_THRESHOLD``, the solution is
    improved by iterative refinement with residuals accumulated in extended
    precision (``numpy.longdouble``; on platforms where that is plain double
    this is ordinary refinement).  The result is re-projected onto the
    tangent space.

    If ``stats`` is given, the LAPACK 1-norm estimate of the condition number
    of the Newton matrix is stored under ``"condition_number"``.

    Raises
    ------
    SingularSystemError
        If the factorization fails or the solution has a large backward error.
    """
    sys.check(wt)
    g = sys.grad
    gnorm = np.linalg.norm(g)
    if gnorm == 0.0:
        return np.zeros_like(g)
    A = sys.newton_matrix()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(A, check_finite=False)
        if stats is not None:
            rcond, _ = scipy.linalg.lapack.dgecon(lu[0], np.linalg.norm(A, 1), norm="1")
            stats["condition_number"] = 1.0 / rcond if rcond > 0 else float("inf")
        v = scipy.linalg.lu_solve(lu, g, check_finite=False)
        r = g - A @ v
        if refine and np.linalg.norm(r) > REFINE_THRESHOLD * gnorm:
            A_x = A.astype(_XP)
            g_x = g.astype(_XP)
            for _ in range(MAX_REFINE_STEPS):
                r = (g_x - A_x @ v.astype(_XP)).astype(np.float64)
                dv = scipy.linalg.lu_solve(lu, r, check_finite=False)
                v = v + dv
                if np.linalg.norm(dv) <= np.finfo(np.float64).eps * np.linalg.norm(v):
                    break
            r = (g_x - A_x @ v.astype(_XP)).astype(np.float64)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError) as exc:
        raise SingularSystemError(f"Newton system is singular: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise SingularSystemError("Newton step is not finite")
    backward = np.linalg.norm(r) / (np.linalg.norm(A, 1) * np.linalg.norm(v) + gnorm)
    if backward > BACKWARD_ERROR_TOL:
        raise SingularSystemError(f"Newton solve backward error {backward:.3e}")
    return _project(sys.base, v, sys.a)


def newton_step_mil(wt, sys: NewtonSystem) -> np.ndarray:
    """Newton direction via the matrix inversion lemma.

    ``v = -wt + (1/a) U^{-1} W (W^T U^{-1} W)^{-1} 1``.  Tangent by
    construction; used to cross-check :func:`newton_step`.
    """
    sys.check(wt)
    a = sys.a
    W = sys.W
    try:
        UinvW = scipy.linalg.solve(sys.U, W, assume_a="sym")
        coef = scipy.linalg.solve(W.T @ UinvW, np.ones(a), assume_a="sym")
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"U is singular: {exc}") from exc
    return -sys.base + UinvW @ coef / a


def retract(wt, v, a: int) -> np.ndarray:
    """Move along ``v`` and renormalize each block to norm ``1/sqrt(a)``."""
    wt = np.asarray(wt, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    B = _blocks(wt + v, a)
    norms = np.linalg.norm(B, axis=1, keepdims=True)
    if np.any(norms < ZERO_BLOCK_TOL):
        raise ZeroBlockError(
            f"blocks {np.flatnonzero(norms[:, 0] < ZERO_BLOCK_TOL).tolist()} vanish after the step"
        )
    return (B / (np.sqrt(a) * norms)).ravel()
