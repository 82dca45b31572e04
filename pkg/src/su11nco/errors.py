"""Exception types shared across the package.

The CLI maps these onto exit codes, so every numeric failure mode that a sweep
may hit gets its own class.
"""


class DomainError(ValueError):
    """A parameter lies outside the domain where the quantity is defined."""


class CapabilityError(ValueError):
    """The request is valid physics but beyond what this implementation supports."""


class DegenerateStateError(ArithmeticError):
    """An operation produced (or requires) a zero-norm state."""


class TruncationError(ArithmeticError):
    """Fock-space truncation leaked more probability than the configured budget."""


class NumericError(ArithmeticError):
    """Non-finite amplitudes or another floating-point breakdown."""


class DivergentSensitivityError(ArithmeticError):
    """The homodyne signal slope vanishes, so error propagation diverges."""


class GridTooSmallError(ArithmeticError):
    """A phase-space quadrature grid does not cover the Wigner function's support."""
