"""Exception hierarchy shared by all modules."""


class DeepStokesError(Exception):
    """Base class for toolkit errors."""


class DomainError(DeepStokesError, ValueError):
    """Argument outside the domain of an operation."""


class ConfigurationError(DeepStokesError, ValueError):
    """Invalid vorticity, grid or run configuration."""


class AdmissibilityError(ConfigurationError):
    """Vorticity violates the decay or depth hypothesis."""


class ParameterOutOfRange(DomainError):
    """Bifurcation parameter outside the admissible range."""


class SingularCoefficientError(DomainError):
    """The coefficient a(p; lambda) is not real and positive on the grid."""


class NumericalFailure(DeepStokesError, RuntimeError):
    """An iterative kernel failed to converge."""


class SingularMatrixError(NumericalFailure):
    """A factorization met a (numerically) zero pivot."""


class NoBifurcationFound(DeepStokesError, RuntimeError):
    """The dispersion function has no sign change in the bracket."""


class MarginViolation(DeepStokesError, ValueError):
    """A state left the open set of admissible perturbations.

    ``inequality`` is 1 (upper slope), 2 (lower slope) or 3 (surface height);
    ``node`` is the (i, j) grid index of the worst offender.
    """

    def __init__(self, inequality, node, value):
        self.inequality = int(inequality)
        self.node = tuple(int(k) for k in node)
        self.value = float(value)
        super().__init__(
            f"margin inequality {self.inequality} violated at node {self.node} "
            f"(margin {self.value:.3e})"
        )


class NewtonFailure(DeepStokesError, RuntimeError):
    """Newton's method did not reach the residual tolerance."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class DegenerateFit(DeepStokesError, ValueError):
    """Decay fit impossible because some level is identically zero."""


class StagnationError(DeepStokesError, ValueError):
    """h_p is non-positive somewhere, so the velocity field is undefined."""
