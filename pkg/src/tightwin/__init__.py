"""Tight minimum-sidelobe Gabor windows by Riemannian Newton iteration."""
from .estimators import CanonicalTightWindow, SlepianWindow, TightWindowDesigner
from .exceptions import (
    ConvergenceError,
    InvalidParamsError,
    NotTangentError,
    NotTightError,
    OffManifoldError,
    SingularSystemError,
    StaleSystemError,
    TightwinError,
    ZeroBlockError,
    ZeroFrameDiagonalError,
)
from .gabor import (
    GaborParams,
    TightnessReport,
    canonical_tight,
    dgt,
    frame_operator_diag,
    idgt,
    is_tight,
    residue_energies,
    verify_reconstruction,
)
from .oblique import (
    NewtonSystem,
    build_system,
    hessian_apply,
    newton_step,
    newton_step_mil,
    objective,
    project_tangent,
    retract,
    riemannian_gradient,
    sort_window,
    sorted_q,
    unsort_window,
)
from .solver import (
    solve_continuation,
    SolverConfig,
    SolverResult,
    SolverTrace,
    Status,
    gradient_floor,
    init_from_slepian,
    solve,
    sweep,
)
from .spectral import (
    SpectrumSamples,
    build_q,
    concentration_ratio,
    sidelobe_energy,
    slepian,
    spectrum,
)

__version__ = "0.1.0"
