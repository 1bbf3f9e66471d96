import numpy as np

from robkat.comm.errors import InputError
from robkat.comm.util import as_float_array, finite_check
from robkat.engine.fit.core import IrlsFitter, LadFitter, NullFit
from robkat.engine.loss import LossFamily, LossSpec, psi


@finite_check("Y", "X")
def fit_null(Y, X, loss: LossSpec = None, max_iter=200, tol=1e-8) -> NullFit:
    """Fits Y = X beta + e by IRLS M-estimation with Proposal 2 scale.

    Starts from ordinary least squares and the normalized MAD, then alternates
    a weighted least squares step (weights psi(e/s)/(e/s)) and a scale step
    until the relative change drops below ``tol`` or ``max_iter`` is reached.
    A fit that runs out of iterations is returned with converged=False. LAD is
    solved exactly as a linear program and ignores max_iter and tol.

    Args:
        Y        (ndarray)           : response, length n
        X        (ndarray)           : n x q design (include the intercept column)
        loss     (LossSpec, optional): defaults to Huber(1.345)
        max_iter (int, optional)     : iteration cap
        tol      (float, optional)   : convergence tolerance

    Returns:
        NullFit:

            > fit_null(np.array([1., 2., 3., 4., 100.]), np.ones((5, 1)), LossSpec.lad()).beta_hat
            array([3.])
    """
    loss = loss or LossSpec.huber()
    Y = as_float_array(Y, "Y", 1)
    X = as_float_array(X, "X", 2)
    n, q = X.shape
    if len(Y) != n:
        raise InputError(f"Y has {len(Y)} rows but X has {n}")
    if n <= q:
        raise InputError(f"need more observations than covariates, got n={n}, q={q}")
    if np.linalg.matrix_rank(X) < q:
        raise InputError("design matrix X is rank deficient")
    if loss.family is LossFamily.LAD:
        return LadFitter(loss).fit(Y, X)
    return IrlsFitter(loss, max_iter=max_iter, tol=tol).fit(Y, X)


def score_vector(fit: NullFit) -> np.ndarray:
    """Score vector w_i = psi(e_i / s) of a null fit.

    Returns:
        ndarray:

            residuals (0, s, -10 s) under Huber(1.345) -> array([ 0.   ,  1.   , -1.345])
    """
    return np.asarray(psi(fit.loss, fit.standardized_residuals), dtype=float)
