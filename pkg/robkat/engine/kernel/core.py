import enum
from abc import abstractmethod
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from robkat.comm.errors import InputError


class KernelKind(str, enum.Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    IBS = "ibs"
    CUSTOM = "custom"


@dataclass(frozen=True)
class GenotypeMatrix:
    """Allele counts of n samples at p SNPs, without missing values.

    Attributes:
        values     (ndarray): n x p, entries in [0, 2]
        sample_ids (tuple)  : n sample labels
        snp_ids    (tuple)  : p SNP labels
    """

    values: np.ndarray
    sample_ids: tuple = ()
    snp_ids: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InputError(f"genotypes must be n x p, got shape {values.shape}")
        if np.isnan(values).any():
            raise InputError("genotypes contain missing values; impute first")
        if values.size and (values.min() < 0 or values.max() > 2):
            raise InputError("genotype values must lie in [0, 2]")
        n, p = values.shape
        sample_ids = tuple(self.sample_ids) or tuple(range(n))
        snp_ids = tuple(self.snp_ids) or tuple(f"snp{k + 1}" for k in range(p))
        if len(sample_ids) != n or len(snp_ids) != p:
            raise InputError("genotype labels do not match the matrix shape")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", sample_ids)
        object.__setattr__(self, "snp_ids", snp_ids)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    @classmethod
    def from_frame(cls, df: pd.DataFrame, impute="mean"):
        """Builds a matrix from a samples x SNPs frame, filling NaN per SNP.

        Args:
            df     (DataFrame): index = sample IDs, columns = SNP IDs, NaN = missing
            impute (str)      : "mean" (linear/quadratic) or "mode" (IBS)
        """
        filled = impute_genotypes(df, impute)
        return cls(filled.to_numpy(dtype=float), tuple(df.index), tuple(df.columns))

    def minor_allele_frequencies(self):
        freq = self.values.mean(axis=0) / 2
        return np.minimum(freq, 1 - freq)


def impute_genotypes(df: pd.DataFrame, method="mean") -> pd.DataFrame:
    if method == "mean":
        fill = df.mean(axis=0)
    elif method == "mode":
        # ties resolve to the smallest allele count
        fill = df.mode(axis=0, dropna=True).iloc[0] if len(df) else df.mean(axis=0)
    else:
        raise InputError(f"unknown imputation '{method}'")
    # SNPs missing in every sample carry no information; zero them
    return df.fillna(fill).fillna(0.0)


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric n x n similarity matrix.

    Attributes:
        matrix   (ndarray)   : n x n values
        kind     (KernelKind): how the matrix was built
        centered (bool)      : whether P K P has been applied
    """

    matrix: np.ndarray
    kind: KernelKind = KernelKind.CUSTOM
    centered: bool = False

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InputError(f"kernel must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InputError("kernel has non-finite entries")
        scale = np.max(np.abs(matrix)) if matrix.size else 0.0
        if np.max(np.abs(matrix - matrix.T), initial=0.0) > 1e-12 * scale:
            raise InputError("kernel is not symmetric")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "kind", KernelKind(self.kind))

    @property
    def n(self):
        return self.matrix.shape[0]


class KernelFunction:
    """Builds a kernel matrix from allele counts."""

    @property
    @abstractmethod
    def kind(self) -> KernelKind:
        return NotImplementedError

    @abstractmethod
    def compute(self, values: np.ndarray) -> np.ndarray:
        return NotImplementedError

    def build(self, genotypes: GenotypeMatrix, weights=None) -> KernelMatrix:
        values = genotypes.values
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            if weights.shape != (genotypes.p,):
                raise InputError(
                    f"expected {genotypes.p} SNP weights, got shape {weights.shape}"
                )
            values = values * weights[None, :]
        matrix = self.compute(values)
        return KernelMatrix((matrix + matrix.T) / 2, self.kind, centered=False)


class LinearKernel(KernelFunction):
    # k(z_i, z_j) = z_i' z_j
    @property
    def kind(self):
        return KernelKind.LINEAR

    def compute(self, values):
        return values @ values.T


class QuadraticKernel(KernelFunction):
    # k(z_i, z_j) = (z_i' z_j)^2, PSD as a Schur product
    @property
    def kind(self):
        return KernelKind.QUADRATIC

    def compute(self, values):
        return (values @ values.T) ** 2


class IbsKernel(KernelFunction):
    """Proportion of alleles shared identical by state.

    With counts in {0, 1, 2}, 2 I{z_ik = z_jk} + I{|z_ik - z_jk| = 1} equals
    2 - |z_ik - z_jk|, so K = 1 - cityblock(z_i, z_j) / 2p.
    """

    @property
    def kind(self):
        return KernelKind.IBS

    def build(self, genotypes: GenotypeMatrix, weights=None):
        if weights is not None:
            raise InputError("SNP weights are not supported for the IBS kernel")
        return super().build(genotypes)

    def compute(self, values):
        # dosages round half up to the nearest allele count
        counts = np.floor(values + 0.5)
        if not np.isin(counts, (0, 1, 2)).all():
            raise InputError("IBS kernel needs allele counts in {0, 1, 2}")
        p = counts.shape[1]
        if p == 0:
            raise InputError("IBS kernel needs at least one SNP")
        return 1.0 - cdist(counts, counts, metric="cityblock") / (2 * p)


KERNEL_FUNCTIONS = {
    KernelKind.LINEAR: LinearKernel,
    KernelKind.QUADRATIC: QuadraticKernel,
    KernelKind.IBS: IbsKernel,
}
