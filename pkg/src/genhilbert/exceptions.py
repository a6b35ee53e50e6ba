"""Exception and warning types raised by genhilbert."""


class GenHilbertError(Exception):
    """Base class for all package errors."""


class NonConvergent(GenHilbertError, ArithmeticError):
    """Adaptive integration did not reach the requested tolerance."""


class GridTooCoarse(GenHilbertError, ArithmeticError):
    """Disk quadrature failed its refinement self-check."""


class TruncationInsufficient(GenHilbertError, ValueError):
    """A truncated Taylor series drops more than the allowed tail."""


class DegenerateTail(GenHilbertError, ValueError):
    """The tail function vanishes on part of the grid, so no log-fit exists."""


class InvalidCase(GenHilbertError, ValueError):
    """Parameters fall outside the hypotheses of the selected theorem case."""


class ConfigError(GenHilbertError, ValueError):
    """Experiment configuration failed validation."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class WellDefinednessWarning(UserWarning):
    """The measure fails the sufficient condition for the series to converge."""
