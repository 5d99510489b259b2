"""Exception hierarchy for the isvp package."""


class IsvpError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(IsvpError):
    """Matrix dimensions are inconsistent (ragged basis, or m < n)."""


class ArityMismatch(IsvpError):
    """Number of target singular values does not match the basis count."""


class NonpositiveSigma(IsvpError):
    """A target singular value is zero or negative."""


class DuplicateSigma(IsvpError):
    """Two target singular values are closer than the configured gap."""


class NonFiniteInput(IsvpError):
    """An input vector or matrix contains NaN or infinity."""


class NumericalFailure(IsvpError):
    """A dense linear algebra kernel failed to converge."""


class NumericalBreakdown(IsvpError):
    """An iteration produced a non-finite intermediate quantity."""


class DegenerateShift(IsvpError):
    """Shift entries collide or vanish where a division requires them."""


class SingularSystem(IsvpError):
    """A linear system that should be solvable turned out singular."""


class SingularJacobian(IsvpError):
    """The (approximate) Jacobian cannot be inverted."""


class SingularValueCollision(IsvpError):
    """Singular values along the iteration path are no longer simple."""


class DegenerateDraw(IsvpError):
    """Random instance generation kept producing degenerate spectra."""


class InsufficientData(IsvpError):
    """Not enough residual history to estimate a convergence rate."""


class IoFailure(IsvpError):
    """Reading or writing an artifact file failed."""
