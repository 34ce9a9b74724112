"""Shared exception and warning types.

The CLI maps these onto process exit codes: data/format problems exit
with 3, numerical failures with 4, usage errors with 2 (handled by the
argument parser itself).
"""


class DataFormatError(Exception):
    """Raised when an input file cannot be parsed or violates a format invariant."""


class NumericalError(Exception):
    """Raised when a numerical operation cannot produce a trustworthy result."""


class DegenerateKernelError(NumericalError):
    """Raised when a sampling pivot is too close to zero to condition on."""


class FitFailureError(NumericalError):
    """Raised when every optimization start fails to produce a finite objective."""


class InvalidParamsError(ValueError):
    """Raised when model parameters violate a structural invariant."""


class NumericalWarning(UserWarning):
    """Warning for degraded numerical results (clamped or dropped quantities)."""
