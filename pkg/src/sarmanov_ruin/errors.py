"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes, so keep the classes stable.
"""


class SarmanovError(Exception):
    """Base class for all library errors."""


class DomainError(SarmanovError, ValueError):
    """An argument lies outside the domain of an operation."""


class ModelError(SarmanovError, ValueError):
    """The model violates a structural constraint (centering, positivity, bounds)."""


class HypothesisError(SarmanovError, ValueError):
    """A theorem hypothesis needed by the requested quantity does not hold."""


class NumericalError(SarmanovError, RuntimeError):
    """A numerical routine failed (quadrature, rejection sampling, consistency)."""


class QuadratureError(NumericalError):
    pass


class AcceptanceRateError(NumericalError):
    pass
