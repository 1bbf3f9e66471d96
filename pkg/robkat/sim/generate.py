import enum

import numpy as np

from robkat.comm.errors import InputError
from robkat.engine.kernel import GenotypeMatrix

LINEAR_SNP_INDEX = (0, 1, 2, 3, 4)


class ErrorDist(str, enum.Enum):
    T3 = "t3"
    CHISQ1 = "chisq1"
    STD_NORMAL = "normal"
    CAUCHY = "cauchy"
    MIX10 = "mix10"
    MIX30 = "mix30"


class HForm(str, enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


# probability of the N(0, 1) component
MIXTURE_THETA = {ErrorDist.MIX10: 0.9, ErrorDist.MIX30: 0.7}


def check_mafs(mafs):
    mafs = np.asarray(mafs, dtype=float)
    if mafs.ndim != 1 or mafs.size == 0:
        raise InputError("mafs must be a non-empty vector")
    if np.any((mafs <= 0) | (mafs > 0.5)):
        raise InputError("minor allele frequencies must lie in (0, 0.5]")
    return mafs


def gen_genotypes(n, mafs, rng: np.random.Generator) -> GenotypeMatrix:
    """Independent Binomial(2, maf_k) allele counts for n samples."""
    mafs = check_mafs(mafs)
    return GenotypeMatrix(rng.binomial(2, mafs, size=(n, mafs.size)).astype(float))


def h_linear(Z: GenotypeMatrix, snp_index=LINEAR_SNP_INDEX) -> np.ndarray:
    """h(Z_i) = sum of the allele counts at ``snp_index`` (the first five SNPs)."""
    snp_index = list(snp_index)
    if Z.p < 5:
        raise InputError(f"linear h needs at least 5 SNPs, got p={Z.p}")
    if not snp_index or min(snp_index) < 0 or max(snp_index) >= Z.p:
        raise InputError(f"snp_index {snp_index} out of range for p={Z.p}")
    return Z.values[:, snp_index].sum(axis=1)


def h_nonlinear(Z: GenotypeMatrix) -> np.ndarray:
    """h(Z_i) = 1 + sum_k Z_ik + 2 sum_{k>=2} Z_i1 Z_ik.

    Returns:
        ndarray:

            > h_nonlinear(GenotypeMatrix([[1, 1, 0, 0, 0, 0, 0, 0, 0]]))
            array([5.])
    """
    values = Z.values
    first = values[:, 0]
    return 1.0 + values.sum(axis=1) + 2.0 * first * values[:, 1:].sum(axis=1)


def effect(Z: GenotypeMatrix, h_form, snp_index=LINEAR_SNP_INDEX) -> np.ndarray:
    if HForm(h_form) is HForm.LINEAR:
        return h_linear(Z, snp_index)
    return h_nonlinear(Z)


def gen_errors(dist, n, rng: np.random.Generator) -> np.ndarray:
    """Draws n iid errors.

    The normal mixtures are B W_0 + (1 - B) W_10 - 10 (1 - theta) with
    W_m ~ N(m, 1) and B ~ Bernoulli(theta), so their mean is exactly zero.
    """
    dist = ErrorDist(dist)
    if dist is ErrorDist.T3:
        return rng.standard_t(3, size=n)
    if dist is ErrorDist.CHISQ1:
        return rng.chisquare(1, size=n)
    if dist is ErrorDist.STD_NORMAL:
        return rng.standard_normal(n)
    if dist is ErrorDist.CAUCHY:
        return rng.standard_cauchy(n)
    theta = MIXTURE_THETA[dist]
    b = rng.random(n) < theta
    w = rng.standard_normal(n) + np.where(b, 0.0, 10.0)
    return w - 10.0 * (1.0 - theta)
