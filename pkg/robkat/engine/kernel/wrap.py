import logging
from collections import namedtuple

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.stats import beta as beta_dist

from robkat.comm.errors import InputError, NumericalError
from robkat.engine.kernel.core import (
    KERNEL_FUNCTIONS,
    GenotypeMatrix,
    IbsKernel,
    KernelKind,
    KernelMatrix,
    LinearKernel,
    QuadraticKernel,
)

PsdCheck = namedtuple("PsdCheck", ["ok", "min_eigenvalue", "max_eigenvalue"])


def linear_kernel(Z: GenotypeMatrix, weights=None) -> KernelMatrix:
    """K_ij = Z_i' Z_j, optionally with per-SNP multipliers on the columns of Z.

    Returns:
        KernelMatrix:

            > linear_kernel(GenotypeMatrix([[2, 0, 1], [1, 1, 0]])).matrix
            array([[5., 2.],
                   [2., 2.]])
    """
    return LinearKernel().build(Z, weights)


def quadratic_kernel(Z: GenotypeMatrix, weights=None) -> KernelMatrix:
    """K_ij = (Z_i' Z_j)^2.

    Returns:
        KernelMatrix:

            > quadratic_kernel(GenotypeMatrix([[2, 0, 1], [1, 1, 0]])).matrix
            array([[25.,  4.],
                   [ 4.,  4.]])
    """
    return QuadraticKernel().build(Z, weights)


def ibs_kernel(Z: GenotypeMatrix) -> KernelMatrix:
    """Identity-by-state kernel, K_ij = (1/2p) sum_k [2 I{Z_ik = Z_jk} + I{|Z_ik - Z_jk| = 1}].

    Returns:
        KernelMatrix:

            > ibs_kernel(GenotypeMatrix([[0, 2], [1, 2]])).matrix
            array([[1.  , 0.75],
                   [0.75, 1.  ]])
    """
    return IbsKernel().build(Z)


def build_kernel(Z: GenotypeMatrix, kind, weights=None) -> KernelMatrix:
    kind = KernelKind(kind)
    if kind not in KERNEL_FUNCTIONS:
        raise InputError(f"kernel '{kind.value}' cannot be built from genotypes")
    return KERNEL_FUNCTIONS[kind]().build(Z, weights)


def center_kernel(K: KernelMatrix) -> KernelMatrix:
    """Double centering P K P with P = I - (1/n) 11'.

    A result that is zero up to roundoff (a constant kernel, e.g. a single
    monomorphic SNP) is returned as an exact zero matrix.

    Returns:
        KernelMatrix:

            > center_kernel(KernelMatrix(np.eye(2))).matrix
            array([[ 0.5, -0.5],
                   [-0.5,  0.5]])
    """
    matrix = K.matrix
    row_means = matrix.mean(axis=1, keepdims=True)
    centered = matrix - row_means - row_means.T + matrix.mean()
    centered = (centered + centered.T) / 2
    scale = np.max(np.abs(matrix)) if matrix.size else 0.0
    if np.max(np.abs(centered), initial=0.0) <= 1e-12 * scale:
        centered = np.zeros_like(centered)
    return KernelMatrix(centered, K.kind, centered=True)


def validate_psd(K: KernelMatrix, tol=1e-8) -> PsdCheck:
    """Checks lambda_min >= -tol * lambda_max.

    Returns:
        PsdCheck: (ok, min_eigenvalue, max_eigenvalue)

            > validate_psd(KernelMatrix(np.array([[1., 2.], [2., 1.]])))
            PsdCheck(ok=False, min_eigenvalue=-1.0, max_eigenvalue=3.0)
    """
    try:
        eigenvalues = scipy.linalg.eigvalsh(K.matrix)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"eigenvalue computation failed: {e}") from e
    lo, hi = float(eigenvalues[0]), float(eigenvalues[-1])
    return PsdCheck(lo >= -tol * max(hi, 0.0), lo, hi)


def beta_maf_weights(mafs, a=1.0, b=25.0) -> np.ndarray:
    """SKAT-style SNP weights: the Beta(a, b) density at each minor allele frequency."""
    mafs = np.asarray(mafs, dtype=float)
    if np.any((mafs < 0) | (mafs > 0.5)):
        raise InputError("minor allele frequencies must lie in [0, 0.5]")
    return beta_dist.pdf(mafs, a, b)


def read_custom_kernel(path, expected_ids=None, tol=1e-8) -> KernelMatrix:
    """Reads a whitespace-delimited n x n kernel whose header row holds sample IDs.

    Rows are in header order. When ``expected_ids`` is given the header must
    hold exactly those IDs; the matrix is then reordered to ``expected_ids``.
    The matrix must pass validate_psd(tol).
    """
    df = pd.read_csv(path, sep=r"\s+", header=0, dtype=str)
    ids = [str(x) for x in df.columns]
    if len(ids) != len(df):
        raise InputError(
            f"{path}: header has {len(ids)} sample IDs but there are {len(df)} rows"
        )
    if len(set(ids)) != len(ids):
        raise InputError(f"{path}: duplicate sample IDs in header")
    try:
        matrix = df.to_numpy(dtype=float)
    except ValueError as e:
        raise InputError(f"{path}: non-numeric kernel entry ({e})") from e
    frame = pd.DataFrame(matrix, index=ids, columns=ids)
    if expected_ids is not None:
        expected = [str(x) for x in expected_ids]
        if set(expected) != set(ids):
            raise InputError(f"{path}: kernel sample IDs do not match the phenotype IDs")
        frame = frame.loc[expected, expected]
    kernel = KernelMatrix(frame.to_numpy(), KernelKind.CUSTOM)
    check = validate_psd(kernel, tol)
    if not check.ok:
        logging.warning("custom kernel %s rejected: min eigenvalue %.3g", path, check.min_eigenvalue)
        raise InputError(
            f"{path}: kernel is not positive semi-definite "
            f"(min eigenvalue {check.min_eigenvalue:.3g}, max {check.max_eigenvalue:.3g})"
        )
    return kernel
