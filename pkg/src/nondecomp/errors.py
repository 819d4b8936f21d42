"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid network, training or experiment configuration."""


class ShapeError(ValueError):
    """Array shapes do not agree with the model or dataset."""


class NumericError(FloatingPointError):
    """A non-finite value showed up where a finite one is required."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class NonDifferentiableError(ValueError):
    """A gradient was requested through a non-differentiable reward."""


class DegeneratePriorError(ValueError):
    """Class prior at 0 or 1."""


class UndefinedRateError(ValueError):
    """TPR or TNR requested for a sample with no members of that class."""


class DomainError(ValueError):
    """Argument outside the domain of a measure."""


class DegeneracyError(ValueError):
    """Pseudolinear denominator fell below its lower bound."""


class ParseError(ValueError):
    """Malformed LIBSVM input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UsageError(ValueError):
    """Incompatible or incomplete experiment request (CLI exit code 2)."""
