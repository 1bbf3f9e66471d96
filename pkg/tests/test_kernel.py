import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from robkat.comm.errors import InputError
from robkat.engine.kernel import (
    GenotypeMatrix,
    KernelKind,
    KernelMatrix,
    beta_maf_weights,
    build_kernel,
    center_kernel,
    ibs_kernel,
    linear_kernel,
    quadratic_kernel,
    read_custom_kernel,
    validate_psd,
)

genotypes = st.integers(min_value=3, max_value=12).flatmap(
    lambda n: arrays(np.int64, (n, 4), elements=st.integers(0, 2))
)


def test_small_kernels_by_hand():
    Z = GenotypeMatrix([[2, 0, 1], [1, 1, 0]])
    np.testing.assert_array_equal(linear_kernel(Z).matrix, [[5, 2], [2, 2]])
    np.testing.assert_array_equal(quadratic_kernel(Z).matrix, [[25, 4], [4, 4]])
    np.testing.assert_allclose(
        ibs_kernel(GenotypeMatrix([[0, 2], [1, 2]])).matrix, [[1, 0.75], [0.75, 1]]
    )


def test_ibs_counts_shared_alleles():
    Z = GenotypeMatrix([[0, 0, 0], [2, 2, 2], [1, 0, 2]])
    K = ibs_kernel(Z).matrix
    np.testing.assert_allclose(np.diag(K), 1.0)
    assert K[0, 1] == 0.0
    # shares 1, 2, 0 alleles at the three SNPs
    assert K[0, 2] == pytest.approx(3 / 6)


@settings(max_examples=50, deadline=None)
@given(values=genotypes)
def test_genotype_kernels_are_symmetric_psd(values):
    Z = GenotypeMatrix(values.astype(float))
    for kind in ("linear", "quadratic", "ibs"):
        K = build_kernel(Z, kind)
        np.testing.assert_array_equal(K.matrix, K.matrix.T)
        check = validate_psd(K, tol=1e-8)
        assert check.ok, (kind, check)


@settings(max_examples=50, deadline=None)
@given(values=genotypes)
def test_centering_is_idempotent_and_zeroes_row_sums(values):
    Kc = center_kernel(ibs_kernel(GenotypeMatrix(values.astype(float))))
    assert Kc.centered
    np.testing.assert_allclose(Kc.matrix.sum(axis=1), 0.0, atol=1e-12)
    np.testing.assert_allclose(center_kernel(Kc).matrix, Kc.matrix, atol=1e-12)


def test_constant_kernel_centers_to_exact_zero():
    Z = GenotypeMatrix(np.ones((6, 1)))
    Kc = center_kernel(ibs_kernel(Z))
    assert not np.any(Kc.matrix)
    assert Kc.kind is KernelKind.IBS


def test_validate_psd_reports_eigenvalues():
    check = validate_psd(KernelMatrix(np.array([[1.0, 2.0], [2.0, 1.0]])))
    assert not check.ok
    assert check.min_eigenvalue == pytest.approx(-1.0)
    assert check.max_eigenvalue == pytest.approx(3.0)
    assert validate_psd(KernelMatrix(np.eye(3))).ok


def test_ibs_rounds_dosages_to_allele_counts():
    rounded = ibs_kernel(GenotypeMatrix([[0.4, 1.6], [1.0, 2.0]])).matrix
    np.testing.assert_allclose(rounded, [[1.0, 0.75], [0.75, 1.0]])
    halves = ibs_kernel(GenotypeMatrix([[0.5, 1.5], [1.0, 2.0]])).matrix
    np.testing.assert_allclose(halves, np.ones((2, 2)))


def test_ibs_rejects_weights():
    with pytest.raises(InputError):
        build_kernel(GenotypeMatrix([[0, 1], [1, 2]]), "ibs", weights=[1.0, 2.0])


def test_weighted_linear_kernel_scales_columns():
    Z = GenotypeMatrix([[1, 2], [2, 0], [0, 1]])
    w = np.array([2.0, 0.5])
    expected = (Z.values * w) @ (Z.values * w).T
    np.testing.assert_allclose(linear_kernel(Z, w).matrix, expected)
    with pytest.raises(InputError):
        linear_kernel(Z, [1.0])


def test_custom_kind_cannot_be_built_from_genotypes():
    with pytest.raises(InputError):
        build_kernel(GenotypeMatrix([[0, 1], [1, 2]]), "custom")


def test_beta_maf_weights():
    mafs = np.array([0.01, 0.1, 0.5])
    np.testing.assert_allclose(beta_maf_weights(mafs), 25 * (1 - mafs) ** 24)
    np.testing.assert_allclose(beta_maf_weights(mafs, 1, 1), 1.0)
    with pytest.raises(InputError):
        beta_maf_weights([0.7])


@pytest.mark.parametrize(
    "values",
    [
        [[0, 3], [1, 1]],
        [[0, np.nan], [1, 1]],
        [0, 1, 2],
    ],
)
def test_invalid_genotypes(values):
    with pytest.raises(InputError):
        GenotypeMatrix(values)


def test_kernel_matrix_validation():
    with pytest.raises(InputError):
        KernelMatrix(np.array([[1.0, 0.2], [0.3, 1.0]]))
    with pytest.raises(InputError):
        KernelMatrix(np.ones((2, 3)))
    with pytest.raises(InputError):
        KernelMatrix(np.array([[1.0, np.inf], [np.inf, 1.0]]))


def test_imputation_policies():
    frame = pd.DataFrame(
        {"rs1": [0.0, np.nan, 2.0, 0.0], "rs2": [0.0, 0.0, 2.0, np.nan]},
        index=["a", "b", "c", "d"],
    )
    mean = GenotypeMatrix.from_frame(frame, "mean")
    assert mean.values[1, 0] == pytest.approx(2 / 3)
    mode = GenotypeMatrix.from_frame(frame, "mode")
    assert mode.values[1, 0] == 0.0
    assert mode.values[3, 1] == 0.0
    assert mode.sample_ids == ("a", "b", "c", "d")
    assert mode.snp_ids == ("rs1", "rs2")


def test_minor_allele_frequencies_fold_at_half():
    Z = GenotypeMatrix([[2, 0], [2, 1], [2, 0], [1, 0]])
    np.testing.assert_allclose(Z.minor_allele_frequencies(), [1 / 8, 1 / 8])


def _write_kernel(path, ids, matrix):
    lines = ["\t".join(ids)] + ["\t".join(f"{v:.10g}" for v in row) for row in matrix]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_read_custom_kernel_reorders_to_expected_ids(tmp_path):
    A = np.random.default_rng(1).standard_normal((3, 2))
    K = A @ A.T
    path = _write_kernel(tmp_path / "k.txt", ["x", "y", "z"], K)
    loaded = read_custom_kernel(path, expected_ids=["z", "x", "y"])
    order = [2, 0, 1]
    np.testing.assert_allclose(loaded.matrix, K[np.ix_(order, order)], rtol=1e-9)
    assert loaded.kind is KernelKind.CUSTOM


def test_read_custom_kernel_rejects_bad_files(tmp_path):
    bad = _write_kernel(tmp_path / "bad.txt", ["x", "y"], [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(InputError, match="positive semi-definite"):
        read_custom_kernel(bad)
    good = _write_kernel(tmp_path / "good.txt", ["x", "y"], [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(InputError):
        read_custom_kernel(good, expected_ids=["x", "w"])
    ragged = _write_kernel(tmp_path / "ragged.txt", ["x", "y", "z"], [[1.0, 0.0, 0.0]])
    with pytest.raises(InputError):
        read_custom_kernel(ragged)


@given(values=genotypes, seed=st.integers(0, 2**32 - 1))
def test_ibs_ignores_snp_order(values, seed):
    shuffled = values[:, np.random.default_rng(seed).permutation(values.shape[1])]
    np.testing.assert_allclose(
        ibs_kernel(GenotypeMatrix(shuffled)).matrix,
        ibs_kernel(GenotypeMatrix(values)).matrix,
        atol=1e-15,
    )


@pytest.mark.parametrize("seed", range(5))
def test_quadratic_is_squared_linear(seed):
    rng = np.random.default_rng(seed)
    Z = GenotypeMatrix(rng.binomial(2, 0.3, size=(20, 7)).astype(float))
    np.testing.assert_allclose(quadratic_kernel(Z).matrix, linear_kernel(Z).matrix ** 2)
