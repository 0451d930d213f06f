"""Split Gibbs sampler with a mirror Langevin step for Poisson inverse problems."""

__version__ = "0.1.0"

from . import backend  # noqa: F401
from .errors import (  # noqa: F401
    PoisGibbsError,
    ParameterDomainError,
    DomainError,
    MirrorRangeError,
    ModelInconsistencyError,
    ConfigError,
    NumericalError,
)
