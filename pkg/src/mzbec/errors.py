"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems
exit with 2, numerical failures with 3.
"""


class ConfigurationError(ValueError):
    """Raised when inputs are structurally invalid (bad N, empty axis, ...)."""


class NumericalFailure(RuntimeError):
    """Raised when a computation cannot produce a trustworthy result."""


class BisectionError(NumericalFailure):
    """Squeezing-target bisection failed to converge; message carries the bracket."""


class EstimationFailure(NumericalFailure):
    """A single estimation trial produced an unusable posterior."""
