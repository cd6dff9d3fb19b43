"""Exception hierarchy.

Contract violations (bad input, a frequency outside the annihilator, a
kernel that is not periodically correlated) derive from
:class:`ContractError`; failures of a numerical residual check derive from
:class:`ToleranceError`. The CLI maps the two families to distinct exit
codes.
"""


class PCFieldError(Exception):
    """Base class for every error raised by this package."""


class ContractError(PCFieldError, ValueError):
    """An operation was called outside its precondition."""


class InvalidSubgroupError(ContractError):
    pass


class DomainError(ContractError):
    """A frequency was expected to lie in the annihilator of K."""


class DimensionError(ContractError):
    pass


class ModelInvalidError(ContractError):
    """Kernel is not Hermitian positive semidefinite, or a model is malformed."""


class NotPeriodicError(ContractError):
    """A function or kernel fails its declared K-periodicity."""


class NotSquareIntegrableError(ContractError):
    pass


class UndecidableError(ContractError):
    """Square integrability cannot be decided from the data supplied."""


class CoverageError(ContractError):
    """A window is too small for the requested lags or shifts."""


class ToleranceError(PCFieldError, ArithmeticError):
    """A numerical residual exceeded its tolerance."""

    def __init__(self, message, violation=None):
        super().__init__(message)
        self.violation = violation


class DegeneracyError(ToleranceError):
    """Eigenphases cannot be clustered unambiguously."""
