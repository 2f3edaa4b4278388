"""Exception and warning types raised by pwlab."""


class PWLabError(Exception):
    """Base class for all pwlab errors."""


class OutOfRange(PWLabError, ValueError):
    """A parameter lies outside the admissible range of the model case."""


class DegenerateRoots(PWLabError):
    """Two roots of the cubic coincide (the point sits on the boundary of D)."""


class BoundaryDegeneracy(PWLabError):
    """A quadrature integrand is not integrable because (J, E) is on the boundary."""


class UndefinedAtZeroJ(PWLabError):
    """The phase increment is undefined at J = 0."""


class PhaseBranchError(PWLabError):
    """The renormalized phase jumps at this point (corotating Gamma_- line)."""


class NoConvergence(PWLabError):
    """An iterative solver did not converge."""


class OutsideImage(PWLabError, ValueError):
    """(T, Psi) lies outside the image of the parameter domain."""


class LeftDomain(PWLabError):
    """A Newton iterate left the parameter domain."""


class SingularM(PWLabError):
    """The matrix M is numerically singular."""


class ToleranceNotMet(PWLabError):
    """The ODE integrator failed to reach the requested tolerance."""


class PeriodMismatch(PWLabError):
    """The shot profile does not close up after one period."""


class BlowUp(PWLabError):
    """The evolved field exceeded the blow-up threshold."""

    def __init__(self, message, time=None, trace=None):
        super().__init__(message)
        self.time = time
        self.trace = trace


class AliasWarning(UserWarning):
    """The profile spectrum is not resolved by the requested Fourier truncation."""
