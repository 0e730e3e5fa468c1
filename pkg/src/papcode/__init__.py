"""Fingerprinting codes, padding-and-permuting, and tracing attacks on estimators."""

from papcode.errors import (
    BudgetExceededError,
    ContractViolationError,
    InfeasiblePaddingError,
    InvalidParameterError,
    OutOfSupportError,
    PapcodeError,
)

__all__ = [
    "BudgetExceededError",
    "ContractViolationError",
    "InfeasiblePaddingError",
    "InvalidParameterError",
    "OutOfSupportError",
    "PapcodeError",
]

__version__ = "0.1.0"
