"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments outside its precondition."""


class InsufficientDataError(ValueError):
    """Too few usable points for a fit."""


class NumericalFailure(RuntimeError):
    """A quadrature or root search did not converge."""


class ReconstructionCoverageError(ValueError):
    """The scale grid does not cover the band needed for inversion.

    ``bands`` holds the uncovered ``(nu_lo, nu_hi)`` intervals.
    """

    def __init__(self, message, bands=()):
        super().__init__(message)
        self.bands = list(bands)


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnderResolvedScaleWarning(UserWarning):
    """Some scales are too small for the sample spacing."""
