"""Exception taxonomy for the engine.

Every failure mode the pipeline can hit maps to one of these classes so the
CLI can translate them into stable exit codes (config errors are 3, any
other computational error is 2).
"""


class EngineError(Exception):
    """Base class for all engine failures."""


class MalformedInputError(EngineError):
    """Raw term lists or context parameters that violate basic invariants."""


class ExpressionClassError(EngineError):
    """A result left the signomial class the engine can represent exactly.

    The documented closure boundary: only single-monomial fields are
    invertible, and Hessians must be diagonal with monomial entries.
    """


class FractionalDomainError(EngineError):
    """A Caputo power-rule application hit a Gamma pole in the numerator."""


class EvaluationDomainError(EngineError):
    """Evaluation requested at a point with a non-positive coordinate."""


class QuadratureFailureError(EngineError):
    """The quadrature oracle did not converge within its subdivision budget."""

    def __init__(self, message, estimates=()):
        super().__init__(message)
        self.estimates = tuple(estimates)


class RegularityError(EngineError):
    """A Hessian entry degenerates at a configured sample point."""


class FlatnessObstructionError(EngineError):
    """A flatness-recursion residual exceeded its threshold in strict mode."""

    def __init__(self, message, degree=None, residual=None):
        super().__init__(message)
        self.degree = degree
        self.residual = residual


class ConfigError(EngineError):
    """A run configuration failed validation."""
