"""Riemannian Newton iteration for tight minimum-sidelobe windows."""
from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ._validation import check_p, check_window
from .exceptions import InvalidParamsError, OffManifoldError, SingularSystemError, ZeroBlockError
from .gabor import GaborParams, canonical_tight
from .oblique import (
    build_system,
    check_on_manifold,
    newton_step,
    objective,
    retract,
    riemannian_gradient,
    sort_window,
    sorted_q,
    unsort_window,
)
from .spectral import slepian

__all__ = [
    "Status",
    "SolverConfig",
    "SolverTrace",
    "SolverResult",
    "gradient_floor",
    "init_from_slepian",
    "solve",
    "sweep",
    "solve_continuation",
]

logger = logging.getLogger(__name__)

_OBJECTIVE_SLACK = 1e-12


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    ITERATION_CAP = "IterationCap"
    STAGNATED = "Stagnated"
    SINGULAR_SYSTEM = "SingularSystem"

    @property
    def ok(self) -> bool:
        """Converged, or stalled at the rounding floor of the gradient."""
        return self in (Status.CONVERGED, Status.STAGNATED)


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and numerics of :func:`solve`.

    Attributes
    ----------
    delta : float
        Stop once the Riemannian gradient norm is at most ``delta``.
    i_max : int
        Maximum number of Newton steps.
    stagnation_window : int
        Stop with ``Stagnated`` when the best gradient norm is already at the
        rounding floor (:func:`gradient_floor`) and has not improved for this
        many steps.  The best iterate is returned.
    refine : bool
        Refine ill-conditioned Newton solves with extended-precision residuals.
    preserve_symmetry : bool
        If the start is symmetric (``w[l] == w[K-1-l]``), symmetrize every
        iterate.  The exact iteration preserves symmetry; this only removes
        rounding noise.
    dump_dir : path, optional
        Write the matrix ``U`` of every iteration as CSV into this directory.
    """

    delta: float = 1e-15
    i_max: int = 1000
    stagnation_window: int = 40
    refine: bool = True
    preserve_symmetry: bool = True
    dump_dir: Optional[Path] = None

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidParamsError(f"delta must be positive, got {self.delta}")
        if self.i_max < 1:
            raise InvalidParamsError(f"i_max must be >= 1, got {self.i_max}")
        if self.stagnation_window < 1:
            raise InvalidParamsError("stagnation_window must be >= 1")


@dataclass
class SolverTrace:
    """Per-iteration record; entry 0 is the starting point.

    ``condition_numbers[i]`` estimates the 1-norm condition number of the
    Newton matrix solved in iteration ``i + 1``.
    """

    grad_norms: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    condition_numbers: list = field(default_factory=list)
    iterations: int = 0
    status: Status = Status.CONVERGED
    message: str = ""

    @property
    def final_grad_norm(self) -> float:
        return self.grad_norms[-1]


@dataclass
class SolverResult:
    window: np.ndarray
    trace: SolverTrace
    p: float
    best_grad_norm: float


def gradient_floor(K: int) -> float:
    """Gradient norm attainable in double precision.

    ``||Qt|| <= 1`` and the iterate has unit norm, so evaluating ``-U w`` is
    accurate to about ``eps sqrt(K)``; the floor allows a factor of 100.
    """
    return 100.0 * np.finfo(np.float64).eps * math.sqrt(K)


def init_from_slepian(p: float, params: GaborParams) -> np.ndarray:
    """Tight window with frame constant ``M / a`` nearest the Slepian window."""
    p = check_p(p, allow_one=False)
    return canonical_tight(slepian(p, params.K), params.M / params.a, params)


def _on_manifold_start(w0, params: GaborParams) -> np.ndarray:
    a = params.a
    # tight windows may carry any frame constant; the manifold fixes M / a
    wt = sort_window(check_window(w0, params.K), a)
    blocks = wt.reshape(a, -1)
    norms = np.linalg.norm(blocks, axis=1)
    if norms.max() == 0:
        raise OffManifoldError("starting window is zero")
    scaled = wt / (math.sqrt(a) * norms.mean())
    check_on_manifold(scaled, a)
    return retract(scaled, np.zeros_like(scaled), a)


def _is_symmetric(wt: np.ndarray, params: GaborParams, tol: float = 1e-12) -> bool:
    w = unsort_window(wt, params.a)
    return bool(np.max(np.abs(w - w[::-1])) <= tol * np.max(np.abs(w)))


def _symmetrize(wt: np.ndarray, params: GaborParams) -> np.ndarray:
    # Reversal maps the manifold and the cost onto themselves, so exact Newton
    # iterates from a symmetric start stay symmetric.  Removing the
    # rounding-level odd part keeps it from being amplified along the
    # near-flat directions of the Hessian.
    w = unsort_window(wt, params.a)
    w = 0.5 * (w + w[::-1])
    return retract(sort_window(w, params.a), np.zeros_like(wt), params.a)


def solve(w0, p: float, params: GaborParams, cfg: SolverConfig | None = None) -> SolverResult:
    """Maximize the mainlobe energy over tight windows by Riemannian Newton steps.

    Parameters
    ----------
    w0 : array_like, shape (K,)
        Tight starting window.  Its frame constant is normalized to ``M / a``.
    p : float
        Mainlobe proportion in ``(0, 1)``.
    params : GaborParams
    cfg : SolverConfig, optional

    Returns
    -------
    SolverResult
        ``window`` is the final iterate for ``Converged`` and ``IterationCap``
        runs and the iterate with the smallest gradient norm otherwise.

    Raises
    ------
    OffManifoldError
        If ``w0`` is not tight.
    """
    cfg = cfg or SolverConfig()
    p = check_p(p, allow_one=False)
    a, K = params.a, params.K
    wt = _on_manifold_start(w0, params)
    Qt = sorted_q(p, K, a)
    floor = gradient_floor(K)

    symmetric = cfg.preserve_symmetry and _is_symmetric(wt, params)
    if symmetric:
        wt = _symmetrize(wt, params)
    sys = build_system(wt, Qt, a)
    g = riemannian_gradient(wt, sys)
    trace = SolverTrace(grad_norms=[float(np.linalg.norm(g))], objective=[objective(wt, Qt)])
    best_wt, best_gn, best_i = wt, trace.grad_norms[0], 0
    if cfg.dump_dir is not None:
        Path(cfg.dump_dir).mkdir(parents=True, exist_ok=True)

    i = 0
    status = Status.CONVERGED
    while trace.grad_norms[-1] > cfg.delta and i < cfg.i_max:
        if cfg.dump_dir is not None:
            sys.dump_csv(Path(cfg.dump_dir) / f"system_iter{i}.csv")
        try:
            stats: dict = {}
            v = newton_step(wt, sys, refine=cfg.refine, stats=stats)
            trace.condition_numbers.append(stats.get("condition_number", 0.0))
            wt = retract(wt, v, a)
            if symmetric:
                wt = _symmetrize(wt, params)
        except (SingularSystemError, ZeroBlockError) as exc:
            status = Status.SINGULAR_SYSTEM
            trace.message = str(exc)
            logger.warning("p=%g: iteration %d: %s", p, i, exc)
            break
        sys = build_system(wt, Qt, a)
        g = riemannian_gradient(wt, sys)
        i += 1
        gn = float(np.linalg.norm(g))
        trace.grad_norms.append(gn)
        trace.objective.append(objective(wt, Qt))
        logger.debug("p=%g iter=%d grad_norm=%.3e", p, i, gn)
        if gn < best_gn:
            best_wt, best_gn, best_i = wt, gn, i
        if best_gn <= floor and i - best_i >= cfg.stagnation_window and gn > cfg.delta:
            status = Status.STAGNATED
            trace.message = f"gradient norm stalled at {best_gn:.3e} (floor {floor:.3e})"
            break
    else:
        if trace.grad_norms[-1] > cfg.delta:
            status = Status.ITERATION_CAP
            trace.message = f"gradient norm {trace.grad_norms[-1]:.3e} after {i} iterations"

    trace.iterations = i
    trace.status = status
    final = best_wt if status in (Status.STAGNATED, Status.SINGULAR_SYSTEM) else wt
    # pure Newton does not guarantee ascent of the mainlobe energy
    if status is Status.CONVERGED and trace.objective[-1] > trace.objective[0] + _OBJECTIVE_SLACK:
        warnings.warn(
            f"p={p}: converged to a point with lower mainlobe energy than the start",
            RuntimeWarning,
            stacklevel=2,
        )
    return SolverResult(window=unsort_window(final, a), trace=trace, p=p, best_grad_norm=best_gn)


def sweep(
    p_list: Iterable[float], params: GaborParams, cfg: SolverConfig | None = None
) -> list[SolverResult]:
    """Solve for an ascending list of ``p``, warm-starting each from the previous.

    The first entry, and any entry following a failed one, starts from
    :func:`init_from_slepian`.
    """
    p_list = [check_p(p, allow_one=False) for p in p_list]
    if not p_list:
        raise InvalidParamsError("p_list is empty")
    if any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise InvalidParamsError("p_list must be strictly ascending")
    results = []
    start = None
    for p in p_list:
        if start is None:
            start = init_from_slepian(p, params)
        res = solve(start, p, params, cfg)
        logger.info(
            "p=%g: %s after %d iterations (grad %.3e)",
            p, res.trace.status.value, res.trace.iterations, res.trace.final_grad_norm,
        )
        results.append(res)
        start = res.window if res.trace.status.ok else None
    return results


def solve_continuation(p: float, params: GaborParams, cfg: SolverConfig | None = None) -> SolverResult:
    """Solve at ``p`` by warm-starting along ``1/K, 2/K, ...`` up to ``p``.

    From the Slepian start, pure Newton can settle on a saddle point once
    ``K p`` exceeds about 10; following the path of optima from small ``p``
    avoids that.  The returned trace is that of the final solve.
    """
    p = check_p(p, allow_one=False)
    K = params.K
    path = [n / K for n in range(1, K) if n / K < p * (1 - 1e-12)]
    return sweep(path + [p], params, cfg)[-1]
