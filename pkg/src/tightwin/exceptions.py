"""Exception hierarchy for tightwin."""


class TightwinError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParamsError(TightwinError, ValueError):
    """Lattice geometry or design parameters are inconsistent."""


class ZeroFrameDiagonalError(TightwinError, ValueError):
    """A residue class of the window carries no energy, so no tight rescaling exists."""


class NotTightError(TightwinError, ValueError):
    """The window does not satisfy the tightness condition."""


class OffManifoldError(TightwinError, ValueError):
    """A sorted window does not lie on the product of spheres."""


class NotTangentError(TightwinError, ValueError):
    """A vector is not in the tangent space at the given base point."""


class StaleSystemError(TightwinError, ValueError):
    """A Newton system was used at a point other than the one it was built at."""


class SingularSystemError(TightwinError, ArithmeticError):
    """The Newton linear system could not be solved reliably."""


class ZeroBlockError(TightwinError, ArithmeticError):
    """A block vanished during retraction."""


class ConvergenceError(TightwinError, RuntimeError):
    """An eigensolver failed to converge."""
