"""Exception types shared across the library."""


class CoupledRisError(Exception):
    """Base class for every library-specific error."""


class DimensionError(CoupledRisError):
    """Vector/matrix sizes of the operands do not agree."""


class RepresentationError(CoupledRisError):
    """Impedance-domain and admittance-domain objects were mixed."""


class SingularSystem(CoupledRisError):
    """A linear system is numerically singular (condition number too large)."""


class CayleyPole(CoupledRisError):
    """The scattering matrix sits at the pole of the inverse Cayley map."""


class NotPositiveDefinite(CoupledRisError):
    """A matrix required to be SPD has a non-positive eigenvalue."""


class GeometryError(CoupledRisError):
    """Invalid array geometry (coincident elements, bad dimensions, ...)."""


class QuadratureError(CoupledRisError):
    """Quadrature refinement did not meet the requested tolerance."""

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class PassivityError(CoupledRisError):
    """Real part of a coupling matrix is not positive semi-definite.

    The offending matrix is attached so it can still be inspected.
    """

    def __init__(self, message, matrix=None, lambda_min=None, lambda_max=None):
        super().__init__(message)
        self.matrix = matrix
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max


class DegenerateChannel(CoupledRisError):
    """One of the RIS channel vectors is zero; any load is optimal."""


class AlignmentInfeasible(CoupledRisError):
    """The alignment linear system could not be satisfied to tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NonConstantDiagonal(CoupledRisError):
    """An operation assuming equal self-impedances got a varying diagonal."""


class ConfigError(CoupledRisError):
    """A CLI configuration file is missing, malformed, or inconsistent."""
