class RobkatError(Exception):
    """Base class for every error raised by robkat."""


class InputError(RobkatError, ValueError):
    """Inputs violate a precondition (shapes, codes, ranks, IDs, domains)."""


class ParseError(InputError):
    """A numeric field in an input file could not be parsed."""

    def __init__(self, path, line, column, value):
        self.path = str(path)
        self.line = line
        self.column = column
        self.value = value
        super().__init__(
            f"{self.path}:{line}: column '{column}' has non-numeric value {value!r}"
        )


class NumericalError(RobkatError, ArithmeticError):
    """A numerical routine failed (quadrature, root bracketing, eigensolver)."""


class DegenerateFitError(NumericalError):
    """Residuals are (mostly) exact zeros, so no scale can be estimated."""
