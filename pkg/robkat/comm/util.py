import functools
import inspect
import logging

import numpy as np

from robkat.comm.errors import InputError, NumericalError, RobkatError


def failed_row_handler(func):
    """Turns a per-set failure into a flagged row instead of aborting a batch.

    The wrapped function must return a dict describing one result row. On a
    robkat or linear algebra error the row is returned with ``error`` filled in
    and ``failure`` set to ``"input"`` or ``"numerical"``.
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (RobkatError, np.linalg.LinAlgError, FloatingPointError) as e:
            kind = "input" if isinstance(e, InputError) else "numerical"
            logging.warning("%s failed: %s", func.__name__, e)
            return {"error": str(e), "failure": kind}

    return wrapper


def finite_check(*names):
    """Rejects non-finite values in the named array arguments."""

    def _finite_check(func):
        sig = inspect.signature(func)

        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            bound = sig.bind_partial(*args, **kwargs).arguments
            for name in names:
                if name in bound and bound[name] is not None:
                    if not np.all(np.isfinite(np.asarray(bound[name], dtype=float))):
                        raise InputError(f"{name} must be finite")
            return func(*args, **kwargs)

        return wrapper

    return _finite_check


def as_float_array(values, name, ndim):
    """Converts to a float ndarray of the given dimension or raises InputError."""
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"{name} is not numeric: {e}") from e
    if arr.ndim != ndim:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def require_convergence(result, what):
    if not result.converged:
        raise NumericalError(f"{what} did not converge: {result.flag}")
    return result.root
