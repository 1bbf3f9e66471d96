from robkat.comm.errors import (
    DegenerateFitError,
    InputError,
    NumericalError,
    ParseError,
    RobkatError,
)
from robkat.comm.util import as_float_array, failed_row_handler, finite_check

__all__ = [
    "DegenerateFitError",
    "InputError",
    "NumericalError",
    "ParseError",
    "RobkatError",
    "as_float_array",
    "failed_row_handler",
    "finite_check",
]
