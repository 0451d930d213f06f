"""Exception classes shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, model errors -> 3,
numerical errors -> 4.
"""


class PoisGibbsError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(PoisGibbsError, ValueError):
    """A distribution or operator parameter is outside its domain."""


class DomainError(PoisGibbsError, ValueError):
    """A vector lies outside the domain of a Bregman generator."""


class MirrorRangeError(PoisGibbsError, ValueError):
    """Dual coordinates outside the range of the mirror gradient."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(int(i) for i in indices)


class ModelInconsistencyError(PoisGibbsError, ValueError):
    """Observed counts are impossible under the forward model."""


class ConfigError(PoisGibbsError, ValueError):
    """Invalid experiment configuration."""


class NumericalError(PoisGibbsError, ArithmeticError):
    """A numerical result left its expected range (NaN/inf/overflow)."""
