import math

import numpy as np
from scipy.stats import gamma, norm

from robkat.comm.errors import InputError
from robkat.engine.kernel import KernelMatrix
from robkat.engine.permutation.core import (
    PermutationMomentCalculator,
    PermutationMoments,
    exceeds,
    permutation_statistics,
    quadratic_forms,
    sampled_statistics,
)

NORMAL_SKEW_THRESHOLD = 1e-8


def _check_pair(Kc: KernelMatrix, w):
    if not Kc.centered:
        raise InputError("the kernel must be centered (use center_kernel)")
    w = np.asarray(w, dtype=float)
    if w.shape != (Kc.n,):
        raise InputError(f"score vector has shape {w.shape}, kernel is {Kc.n} x {Kc.n}")
    if not np.all(np.isfinite(w)):
        raise InputError("score vector must be finite")
    return w


def test_statistic(w, Kc: KernelMatrix) -> float:
    """T = w' P K P w for a centered kernel.

    Returns:
        float:

            > test_statistic(np.array([1., 2., 3.]), center_kernel(KernelMatrix(np.eye(3))))
            2.0
    """
    w = _check_pair(Kc, w)
    return float(quadratic_forms(Kc, w[None, :])[0])


# not a pytest test despite the name
test_statistic.__test__ = False


def permutation_moments(Kc: KernelMatrix, w) -> PermutationMoments:
    """Exact mean, variance and skewness of T over all n! permutations of w.

    Args:
        Kc (KernelMatrix): centered kernel, n >= 3
        w  (ndarray)     : score vector

    Returns:
        PermutationMoments: for constant w, (0, 0, 0)
    """
    w = _check_pair(Kc, w)
    return PermutationMomentCalculator(Kc).moments(w)


def pearson3_pvalue(T, moments: PermutationMoments) -> float:
    """Upper tail of the Pearson type III law matching the permutation moments.

    T is standardized to T* = (T - mean) / sd. For skewness g > 0 the law is a
    gamma with shape 4/g^2 shifted to mean 0 and variance 1; g < 0 uses its
    mirror image; |g| <= 1e-8 falls back to the standard normal. A degenerate
    null (variance 0) gives p = 1.

    Returns:
        float:

            > pearson3_pvalue(1.6449, PermutationMoments(0.0, 1.0, 0.0))
            0.05000...
    """
    if moments.degenerate:
        return 1.0
    t = (T - moments.mean) / moments.std
    g = moments.skewness
    if abs(g) <= NORMAL_SKEW_THRESHOLD:
        p = norm.sf(t)
    else:
        shape = 4.0 / g**2
        half = abs(g) / 2.0
        if g > 0:
            p = gamma.sf((t + 2.0 / g) / half, shape)
        else:
            p = gamma.cdf((-t + 2.0 / abs(g)) / half, shape)
    return float(np.clip(p, 0.0, 1.0))


def exact_permutation_moments(Kc: KernelMatrix, w) -> PermutationMoments:
    """Moments of T by enumerating every permutation (n <= 9)."""
    w = _check_pair(Kc, w)
    values = permutation_statistics(Kc, w)
    mean = float(values.mean())
    variance = float(np.mean((values - mean) ** 2))
    if variance <= 0.0 or np.ptp(w) == 0:
        return PermutationMoments(0.0 if np.ptp(w) == 0 else mean, 0.0, 0.0)
    third = float(np.mean((values - mean) ** 3))
    return PermutationMoments(mean, variance, third / variance**1.5)


def exact_permutation_pvalue(Kc: KernelMatrix, w) -> float:
    """(1 + #{pi : T_pi >= T_obs}) / (1 + n!) over all n! permutations (n <= 9).

    Ties are counted with a 1e-12 relative slack.
    """
    w = _check_pair(Kc, w)
    if np.ptp(w) == 0:
        return 1.0
    observed = test_statistic(w, Kc)
    values = permutation_statistics(Kc, w)
    count = int(np.count_nonzero(exceeds(values, observed)))
    return (1 + count) / (1 + math.factorial(len(w)))


def monte_carlo_pvalue(Kc: KernelMatrix, w, B=10000, seed=None) -> float:
    """(1 + #{b : T_b >= T_obs}) / (1 + B) over B random permutations.

    Args:
        seed (int, SeedSequence or Generator): makes the result deterministic
    """
    w = _check_pair(Kc, w)
    if B < 100:
        raise InputError(f"need at least 100 Monte Carlo permutations, got {B}")
    if np.ptp(w) == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    observed = test_statistic(w, Kc)
    values = sampled_statistics(Kc, w, int(B), rng)
    count = int(np.count_nonzero(exceeds(values, observed)))
    return (1 + count) / (1 + B)
