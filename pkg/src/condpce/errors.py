"""Exception hierarchy shared by every module of the package."""


class CondPceError(Exception):
    """Base class for all errors raised by condpce."""


class ParameterError(CondPceError, ValueError):
    """An argument is outside the set of admissible values."""


class DomainError(CondPceError, ValueError):
    """A point lies outside the support of its input distribution."""


class ConditioningError(CondPceError, ArithmeticError):
    """A least-squares system is rank deficient at the working tolerance."""

    def __init__(self, message, rank=None, n_columns=None):
        super().__init__(message)
        self.rank = rank
        self.n_columns = n_columns


class UnderdeterminedError(ConditioningError):
    """Fewer observations than unknown coefficients."""


class DegenerateModelError(CondPceError, ArithmeticError):
    """Sensitivity indices requested for a model with zero variance."""


class SchemaError(CondPceError, ValueError):
    """A serialized document does not match the expected schema or version."""
