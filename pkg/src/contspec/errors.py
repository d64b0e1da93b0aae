"""Exception hierarchy.

Each family carries the process exit code the CLI reports for it, so a
failure deep inside a module surfaces with a stable, documented code.
"""


class ContspecError(Exception):
    """Base class; ``exit_code`` is used by the command-line front end."""

    exit_code = 1

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def record(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), "details": self.details}


class ValidationError(ContspecError, ValueError):
    exit_code = 2


class DomainError(ValidationError):
    """Argument outside the domain of the function."""


class PoleError(ContspecError, ArithmeticError):
    exit_code = 3


class PoleAtC(PoleError):
    """Hypergeometric lower parameter is a non-positive integer."""


class IntegerDifferencePole(PoleError):
    """``sin(pi (ell - |m|))`` vanishes."""


class NonConvergent(ContspecError, ArithmeticError):
    """A series, continued fraction or iteration exceeded its cap."""

    exit_code = 3


class NearPole(ContspecError, ArithmeticError):
    """Evaluation too close to theta = 0 or pi for a 1/sin(theta) term."""

    exit_code = 3


PoleProximity = NearPole


class ComplexOrderUnsupported(ContspecError):
    exit_code = 3


class FitDegenerate(ContspecError):
    exit_code = 6


class GridTooCoarse(ValidationError):
    """Quadrature or stencil grid cannot resolve the request."""


class SingularIntegrand(ContspecError, ArithmeticError):
    """Quadrature does not settle under refinement."""

    exit_code = 4


class ModelMismatch(SingularIntegrand):
    """Remainder after singularity extraction is not smooth."""


class QuadratureStall(SingularIntegrand):
    pass


class NotContractive(ContspecError):
    exit_code = 4


class MaxIterExceeded(NonConvergent):
    exit_code = 4


class IndefiniteMass(ContspecError):
    exit_code = 3


class AlphaTableMiss(ContspecError):
    exit_code = 5


class TinyRadialFactor(ContspecError):
    exit_code = 6


class ConstraintViolation(ContspecError):
    exit_code = 6


OutsideDomain = ConstraintViolation


class NoDescentStep(ContspecError):
    exit_code = 6


class IterationCap(ContspecError):
    exit_code = 6


class UnsupportedPoleOrder(ValidationError):
    pass


class NodeFailure(ContspecError):
    exit_code = 4


class Overflow(ContspecError, FloatingPointError):
    exit_code = 3


class Underflow(ContspecError, FloatingPointError):
    exit_code = 3
