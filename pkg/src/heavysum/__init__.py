"""Large-deviation diagnostics for sums of heavy-tailed random variables."""

from .distmodel import (
    CenteredLognormal,
    Exponential,
    LogWeibull,
    RegularlyVarying,
    TabulatedPsi,
    TailModel,
    load_model,
    model_from_spec,
)
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    HeavySumError,
    NotFoundError,
    NumericError,
    PreconditionError,
    QuadratureError,
    RegimeError,
)

__version__ = "0.1.0"

__all__ = [
    "CenteredLognormal",
    "Exponential",
    "LogWeibull",
    "RegularlyVarying",
    "TabulatedPsi",
    "TailModel",
    "load_model",
    "model_from_spec",
    "AccuracyError",
    "ConfigError",
    "DomainError",
    "HeavySumError",
    "NotFoundError",
    "NumericError",
    "PreconditionError",
    "QuadratureError",
    "RegimeError",
    "__version__",
]
