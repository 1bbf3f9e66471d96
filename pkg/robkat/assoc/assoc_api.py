import enum
import logging
from dataclasses import dataclass

import numpy as np
from multipledispatch import dispatch

from robkat.comm.errors import InputError
from robkat.engine.fit import NullFit, fit_null, score_vector
from robkat.engine.kernel import (
    GenotypeMatrix,
    KernelKind,
    KernelMatrix,
    build_kernel,
    center_kernel,
)
from robkat.engine.loss import LossSpec
from robkat.engine.permutation import (
    PermutationMomentCalculator,
    PermutationMoments,
    exact_permutation_pvalue,
    monte_carlo_pvalue,
    pearson3_pvalue,
    test_statistic,
)


class Method(str, enum.Enum):
    PEARSON3 = "pearson3"
    EXACT = "exact"
    MONTE_CARLO = "mc"


@dataclass(frozen=True)
class TestResult:
    """Outcome of one kernel association test.

    Attributes:
        statistic     (float)             : T = w' P K P w
        pvalue        (float)             : in [0, 1]
        moments       (PermutationMoments): exact permutation moments of T
        method        (Method)            : how the p-value was obtained
        loss          (LossSpec)          : loss of the null fit
        kernel_kind   (KernelKind)        : kernel used
        n             (int)               : sample size
        fit_converged (bool)              : whether the null fit converged
        degenerate    (bool)              : permutation variance is zero (p = 1)
    """

    __test__ = False

    statistic: float
    pvalue: float
    moments: PermutationMoments
    method: Method
    loss: LossSpec
    kernel_kind: KernelKind
    n: int
    fit_converged: bool
    degenerate: bool


def has_intercept(X):
    """True when some column of X is constant and nonzero."""
    return any(np.all(col == col[0]) and col[0] != 0 for col in X.T)


def design_matrix(X, n, add_intercept=True):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != n:
        raise InputError(f"X has {X.shape[0]} rows, expected {n}")
    if add_intercept and not has_intercept(X):
        X = np.hstack([np.ones((n, 1)), X])
    if X.shape[1] == 0:
        raise InputError("design matrix has no columns")
    return X


def _test_from_fit(fit, K, method, mc_reps, seed, calculator):
    method = Method(method)
    Kc = K if K.centered else center_kernel(K)
    if Kc.n != fit.n:
        raise InputError(f"kernel is {Kc.n} x {Kc.n} but the fit has n={fit.n}")
    if not fit.loss.monotone_psi:
        logging.warning(
            "%s has a redescending psi; the test may be suboptimal", fit.loss
        )

    w = score_vector(fit)
    statistic = test_statistic(w, Kc)
    calculator = calculator or PermutationMomentCalculator(Kc)
    moments = calculator.moments(w)
    if method is Method.PEARSON3:
        pvalue = pearson3_pvalue(statistic, moments)
    elif method is Method.EXACT:
        pvalue = exact_permutation_pvalue(Kc, w)
    else:
        pvalue = monte_carlo_pvalue(Kc, w, mc_reps, seed)

    return TestResult(
        statistic=statistic,
        pvalue=pvalue,
        moments=moments,
        method=method,
        loss=fit.loss,
        kernel_kind=Kc.kind,
        n=fit.n,
        fit_converged=fit.converged,
        degenerate=moments.degenerate,
    )


@dispatch(NullFit, KernelMatrix)
def robkat_test(
    fit, K, method="pearson3", mc_reps=10000, seed=None, calculator=None
) -> TestResult:
    """Tests a kernel against a precomputed null fit.

    The null fit does not depend on the genotypes, so batch and simulation
    code fit once and call this overload per kernel. A
    PermutationMomentCalculator built for the centered kernel may be passed to
    reuse its kernel-side sums across fits.
    """
    return _test_from_fit(fit, K, method, mc_reps, seed, calculator)


@dispatch(np.ndarray, np.ndarray, KernelMatrix)
def robkat_test(  # pylint: disable=function-redefined  # noqa
    Y,
    X,
    K,
    loss=None,
    method="pearson3",
    mc_reps=10000,
    seed=None,
    add_intercept=True,
    max_iter=200,
    tol=1e-8,
) -> TestResult:
    """Tests a ready-made (e.g. custom) kernel for association with Y given X.

    Args:
        Y             (ndarray)     : response, length n
        X             (ndarray)     : n x q covariates
        K             (KernelMatrix): n x n kernel, centered or not
        loss          (LossSpec)    : defaults to Huber(1.345)
        method        (str)         : pearson3 / exact / mc
        add_intercept (bool)        : prepend a column of ones unless X has one
    """
    Y = np.asarray(Y, dtype=float)
    X = design_matrix(X, len(Y), add_intercept)
    fit = fit_null(Y, X, loss or LossSpec.huber(), max_iter=max_iter, tol=tol)
    return _test_from_fit(fit, K, method, mc_reps, seed, None)


@dispatch(np.ndarray, np.ndarray, GenotypeMatrix)
def robkat_test(  # pylint: disable=function-redefined  # noqa
    Y,
    X,
    Z,
    loss=None,
    kernel_kind="ibs",
    method="pearson3",
    mc_reps=10000,
    seed=None,
    weights=None,
    add_intercept=True,
    max_iter=200,
    tol=1e-8,
) -> TestResult:
    """Robust kernel association test of H0: h(Z) = 0 in Y = X beta + h(Z) + e.

    Fits the null model, forms w_i = psi(e_i / s), builds and centers the
    kernel, and returns T = w' P K P w with its Pearson type III p-value
    (or an exact / Monte Carlo permutation p-value on request).

    Args:
        Y           (ndarray)       : response, length n
        X           (ndarray)       : n x q covariates
        Z           (GenotypeMatrix): n x p genotypes
        loss        (LossSpec)      : defaults to Huber(1.345)
        kernel_kind (str)           : linear / quadratic / ibs
        method      (str)           : pearson3 / exact / mc
        weights     (ndarray)       : optional per-SNP multipliers (linear/quadratic)

    Returns:
        TestResult:

            > robkat_test(Y, X, Z, LossSpec.huber(), "ibs")
            TestResult(statistic=1.93..., pvalue=0.41..., ..., method=<Method.PEARSON3: 'pearson3'>, ...)
    """
    Y = np.asarray(Y, dtype=float)
    if Z.n != len(Y):
        raise InputError(f"genotypes have {Z.n} samples, Y has {len(Y)}")
    K = build_kernel(Z, kernel_kind, weights)
    return robkat_test(
        Y,
        X,
        K,
        loss=loss,
        method=method,
        mc_reps=mc_reps,
        seed=seed,
        add_intercept=add_intercept,
        max_iter=max_iter,
        tol=tol,
    )


def skat_test(Y, X, Z, kernel_kind="linear", **kwargs) -> TestResult:
    """Least squares RobKAT, the classical SKAT statistic with permutation moments."""
    return robkat_test(
        Y, X, Z, loss=LossSpec.least_squares(), kernel_kind=kernel_kind, **kwargs
    )
