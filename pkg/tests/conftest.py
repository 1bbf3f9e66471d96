import numpy as np
import pandas as pd
import pytest

from robkat.engine.kernel import GenotypeMatrix, KernelMatrix, center_kernel, ibs_kernel
from robkat.sim.generate import gen_genotypes

MAFS = (0.312, 0.184, 0.447, 0.265, 0.093, 0.358, 0.141, 0.409, 0.226)


def null_data(n, seed, q=2, p=9):
    """Y = X beta + t3 errors with genotypes unrelated to Y; X carries an intercept."""
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.standard_normal((n, q))])
    Y = X @ np.arange(1.0, q + 2) + rng.standard_t(3, size=n)
    Z = gen_genotypes(n, MAFS[:p], rng)
    return Y, X, Z


def random_centered_kernel(n, rng, kind="ibs"):
    Z = GenotypeMatrix(rng.binomial(2, 0.35, size=(n, 6)).astype(float))
    if kind == "ibs":
        K = ibs_kernel(Z)
    else:
        A = rng.standard_normal((n, 3))
        K = KernelMatrix(A @ A.T)
    return center_kernel(K)


@pytest.fixture
def rng():
    return np.random.default_rng(20200406)


def write_tsv(path, frame):
    frame.to_csv(path, sep="\t", index=False, na_rep="NA")
    return str(path)


@pytest.fixture
def study_files(tmp_path):
    """Phenotype, covariate, genotype and set files for 60 samples and 12 SNPs."""
    rng = np.random.default_rng(7)
    n, p = 60, 12
    ids = [f"S{i:03d}" for i in range(n)]
    snps = [f"rs{k + 1}" for k in range(p)]
    geno = rng.binomial(2, 0.3, size=(n, p)).astype(float)
    geno[:, 11] = 1.0  # monomorphic
    age = rng.normal(50, 10, size=n)
    sex = rng.integers(0, 2, size=n).astype(float)
    pheno = 0.02 * age + 0.5 * sex + 0.8 * geno[:, 0] + rng.standard_t(3, size=n)

    pheno_frame = pd.DataFrame({"sample_id": ids, "hsv2": pheno})
    covar_frame = pd.DataFrame({"sample_id": ids, "age": age, "sex": sex})
    geno_frame = pd.DataFrame(geno, columns=snps)
    geno_frame.insert(0, "sample_id", ids)
    sets = pd.DataFrame(
        {
            "set_name": ["GENE1"] * 4 + ["GENE2"] * 4 + ["GENE3"] * 2 + ["MONO"] + ["COPY"] * 4,
            "snp_id": snps[0:4] + snps[4:8] + snps[8:10] + [snps[11]] + snps[0:4],
        }
    )
    return {
        "pheno": write_tsv(tmp_path / "pheno.tsv", pheno_frame),
        "covar": write_tsv(tmp_path / "covar.tsv", covar_frame),
        "geno": write_tsv(tmp_path / "geno.tsv", geno_frame),
        "sets": write_tsv(tmp_path / "sets.tsv", sets),
        "frames": (pheno_frame, covar_frame, geno_frame, sets),
        "dir": tmp_path,
    }
