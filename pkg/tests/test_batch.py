import numpy as np
import pandas as pd
import pytest

from conftest import write_tsv
from robkat.assoc import robkat_test
from robkat.comm.errors import InputError
from robkat.engine.kernel import linear_kernel
from robkat.engine.loss import LossSpec
from robkat.io import BATCH_COLUMNS, load_study, run_batch

KERNELS = ["linear", "quadratic", "ibs"]


def _study(files):
    return load_study(files["pheno"], files["covar"], files["geno"], files["sets"])


def test_rows_are_losses_by_sets_by_kernels(study_files):
    study = _study(study_files)
    table = run_batch(study, [LossSpec.huber(), LossSpec.least_squares()], KERNELS)
    assert len(table) == 2 * 5 * 3
    assert list(table.columns[: len(BATCH_COLUMNS)]) == BATCH_COLUMNS
    assert list(table["set"].unique()) == ["GENE1", "GENE2", "GENE3", "MONO", "COPY"]
    first = table.iloc[:6]
    assert list(first["kernel"]) == ["linear"] * 2 + ["quadratic"] * 2 + ["ibs"] * 2
    assert list(first["loss"]) == ["huber(1.345)", "ls"] * 3
    assert (table["n"] == 60).all()


def test_single_loss_gives_sets_by_kernels(study_files):
    table = run_batch(_study(study_files), LossSpec.huber(), KERNELS)
    assert len(table) == 5 * 3
    assert table["error"].isna().all()
    assert table["pvalue"].between(0, 1).all()


def test_duplicate_set_gives_identical_rows(study_files):
    table = run_batch(_study(study_files), [LossSpec.huber()], KERNELS)
    gene1 = table[table["set"] == "GENE1"].reset_index(drop=True)
    copy = table[table["set"] == "COPY"].reset_index(drop=True)
    pd.testing.assert_series_equal(gene1["statistic"], copy["statistic"])
    pd.testing.assert_series_equal(gene1["pvalue"], copy["pvalue"])


def test_monomorphic_set_is_degenerate(study_files):
    table = run_batch(_study(study_files), [LossSpec.huber()], KERNELS)
    mono = table[table["set"] == "MONO"]
    assert (mono["pvalue"] == 1.0).all()
    assert mono["degenerate"].all()
    assert (mono["n_snps"] == 1).all()


def test_row_matches_single_test(study_files):
    study = _study(study_files)
    table = run_batch(study, [LossSpec.huber()], ["linear"])
    row = table[table["set"] == "GENE2"].iloc[0]
    X = np.column_stack([np.ones(study.n), study.covariates.to_numpy()])
    Z = study.genotype_matrix(study.snp_sets["GENE2"], "linear")
    expected = robkat_test(study.phenotype, X, Z, kernel_kind="linear")
    assert row["statistic"] == pytest.approx(expected.statistic, rel=1e-12)
    assert row["pvalue"] == pytest.approx(expected.pvalue, rel=1e-12)
    assert row["converged"]


def test_empty_set_becomes_flagged_row(study_files):
    pheno, covar, geno, sets = study_files["frames"]
    sets = pd.concat([sets, pd.DataFrame({"set_name": ["GHOST"], "snp_id": ["rs404"]})])
    path = write_tsv(study_files["dir"] / "sets2.tsv", sets)
    study = load_study(study_files["pheno"], study_files["covar"], study_files["geno"], path)
    table = run_batch(study, [LossSpec.huber()], ["ibs"])
    ghost = table[table["set"] == "GHOST"].iloc[0]
    assert "no genotyped SNPs" in ghost["error"]
    assert ghost["failure"] == "input"
    assert pd.isna(ghost["pvalue"])
    assert table[table["set"] != "GHOST"]["error"].isna().all()


def test_shuffled_inputs_give_identical_results(study_files, tmp_path):
    pheno, covar, geno, sets = study_files["frames"]
    order = np.random.default_rng(0).permutation(len(pheno))
    shuffled = tmp_path / "shuffled"
    shuffled.mkdir()
    study = load_study(
        write_tsv(shuffled / "p.tsv", pheno.iloc[order]),
        write_tsv(shuffled / "c.tsv", covar.iloc[order[::-1]]),
        write_tsv(shuffled / "g.tsv", geno.iloc[order]),
        study_files["sets"],
    )
    a = run_batch(_study(study_files), [LossSpec.huber()], KERNELS)
    b = run_batch(study, [LossSpec.huber()], KERNELS)
    np.testing.assert_allclose(b["statistic"], a["statistic"], rtol=1e-10)
    np.testing.assert_allclose(b["pvalue"], a["pvalue"], rtol=1e-10)


def test_threads_do_not_change_results(study_files):
    study = _study(study_files)
    one = run_batch(study, [LossSpec.huber()], KERNELS, threads=1)
    many = run_batch(study, [LossSpec.huber()], KERNELS, threads=4)
    pd.testing.assert_frame_equal(one, many)


def test_monte_carlo_rows_are_seeded(study_files):
    study = _study(study_files)
    a = run_batch(study, [LossSpec.huber()], ["ibs"], method="mc", mc_reps=500, seed=3)
    b = run_batch(study, [LossSpec.huber()], ["ibs"], method="mc", mc_reps=500, seed=3)
    pd.testing.assert_series_equal(a["pvalue"], b["pvalue"])
    assert (a["method"] == "mc").all()


def test_beta_weights_change_linear_but_not_ibs(study_files):
    study = _study(study_files)
    plain = run_batch(study, [LossSpec.huber()], ["linear", "ibs"])
    weighted = run_batch(study, [LossSpec.huber()], ["linear", "ibs"], weights="beta")
    lin = plain["kernel"] == "linear"
    gene1 = plain["set"] == "GENE1"
    assert weighted[lin & gene1]["statistic"].iloc[0] != plain[lin & gene1]["statistic"].iloc[0]
    pd.testing.assert_series_equal(weighted[~lin]["pvalue"], plain[~lin]["pvalue"])


def test_custom_kernel_row(study_files, tmp_path):
    study = _study(study_files)
    snps = [f"rs{k}" for k in range(1, 11)]
    K = linear_kernel(study.genotype_matrix(snps, "linear")).matrix
    order = np.random.default_rng(1).permutation(study.n)
    ids = [study.sample_ids[i] for i in order]
    rows = K[np.ix_(order, order)]
    lines = ["\t".join(ids)] + ["\t".join(format(float(v), ".17g") for v in row) for row in rows]
    path = tmp_path / "grm.txt"
    path.write_text("\n".join(lines) + "\n")

    table = run_batch(study, [LossSpec.huber()], ["custom"], custom_kernel=str(path))
    assert len(table) == 1
    row = table.iloc[0]
    assert row["set"] == "grm"
    assert row["kernel"] == "custom"

    X = np.column_stack([np.ones(study.n), study.covariates.to_numpy()])
    expected = robkat_test(study.phenotype, X, study.genotype_matrix(snps, "linear"), kernel_kind="linear")
    assert row["pvalue"] == pytest.approx(expected.pvalue, rel=1e-8)


def test_invalid_requests(study_files):
    study = _study(study_files)
    with pytest.raises(InputError):
        run_batch(study, [], KERNELS)
    with pytest.raises(InputError):
        run_batch(study, [LossSpec.huber()], ["custom"])
    with pytest.raises(ValueError):
        run_batch(study, [LossSpec.huber()], ["gaussian"])
