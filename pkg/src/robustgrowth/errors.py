"""Exception types raised across the package.

Numerical failures derive from :class:`NumericalError` so the command line
front end can map them to a distinct exit code.
"""


class RobustGrowthError(Exception):
    """Base class for all package errors."""


class ValidationError(RobustGrowthError, ValueError):
    """Bad user input (configuration, parameters, preconditions)."""


class NumericalError(RobustGrowthError, ArithmeticError):
    """A computation did not produce a trustworthy number."""


class SingularCovariance(NumericalError):
    """Covariance is (numerically) singular on the tangent space."""


class NonpositiveDensity(NumericalError):
    """Density evaluated to a non-positive value at an interior point."""


class GridTooCoarse(NumericalError):
    """Exhaustion tail increments oscillate, so no limit can be read off."""


class AssumptionViolated(ValidationError):
    """A well-posedness check failed.

    Parameters
    ----------
    item : str
        Which check failed, one of ``"i"``, ``"ii"``, ``"iii"``.
    diagnostics : Diagnostics, optional
        The full diagnostics record.
    """

    def __init__(self, item, diagnostics=None, message=None):
        self.item = item
        self.diagnostics = diagnostics
        super().__init__(message or f"assumption ({item}) fails")


class NotGradientCase(ValidationError):
    """The supplied potential does not satisfy c^{-1} div c = grad H."""


class NotInDomainD(ValidationError):
    """Candidate function has a non-integrable positive part of L u / u."""


class NonSymmetricAssembly(NumericalError):
    """Assembled stiffness matrix is not symmetric."""


class NoConvergence(NumericalError):
    """Iterative solver stopped at its iteration cap."""

    def __init__(self, message, residual=float("nan")):
        self.residual = residual
        super().__init__(message)


class NotDivergenceFree(ValidationError):
    """Perturbation flux has non-zero divergence."""


class AllPathsExploded(NumericalError):
    """Every simulated path left the guard element before half the horizon.

    The partially filled bundle is attached as ``bundle`` so callers can
    still inspect exit times.
    """

    def __init__(self, message, bundle=None):
        self.bundle = bundle
        super().__init__(message)


class TieDerivative(NumericalError):
    """Derivative requested at a rank tie of a field that is not smooth there."""


class BadParams(ValidationError):
    """Theta-matrix parameters violate their constraints.

    Parameters
    ----------
    failures : list of str
        Human readable description of each failed constraint.
    """

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("bad theta parameters: " + "; ".join(self.failures))
