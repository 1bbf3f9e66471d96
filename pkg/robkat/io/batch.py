import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from robkat.assoc import Method, design_matrix, robkat_test
from robkat.comm.errors import InputError
from robkat.comm.util import failed_row_handler
from robkat.engine.fit import fit_null
from robkat.engine.kernel import (
    KernelKind,
    beta_maf_weights,
    build_kernel,
    center_kernel,
    read_custom_kernel,
)
from robkat.engine.loss import LossSpec
from robkat.engine.permutation import PermutationMomentCalculator
from robkat.io.study import StudyData

BATCH_COLUMNS = [
    "set",
    "kernel",
    "loss",
    "n",
    "n_snps",
    "statistic",
    "pvalue",
    "method",
    "converged",
    "degenerate",
    "error",
]


@failed_row_handler
def null_fit_row(Y, X, loss, max_iter, tol):
    return {"fit": fit_null(Y, X, loss, max_iter=max_iter, tol=tol)}


@failed_row_handler
def kernel_row(study: StudyData, snps, kind, weights, beta_params):
    if not snps:
        raise InputError("set has no genotyped SNPs")
    Z = study.genotype_matrix(snps, kind)
    multipliers = None
    if weights == "beta" and kind is not KernelKind.IBS:
        multipliers = beta_maf_weights(Z.minor_allele_frequencies(), *beta_params)
    Kc = center_kernel(build_kernel(Z, kind, multipliers))
    return {"kernel": Kc, "calculator": PermutationMomentCalculator(Kc)}


@failed_row_handler
def association_row(fit, prepared, method, mc_reps, seed):
    result = robkat_test(
        fit,
        prepared["kernel"],
        method=method,
        mc_reps=mc_reps,
        seed=seed,
        calculator=prepared["calculator"],
    )
    return {
        "statistic": result.statistic,
        "pvalue": result.pvalue,
        "converged": result.fit_converged,
        "degenerate": result.degenerate,
    }


def mc_seed(seed, loss_index, kernel_index, set_name):
    """Seed stream of one row, fixed by its loss, kernel and set name."""
    key = (loss_index, kernel_index, zlib.crc32(set_name.encode()))
    return np.random.SeedSequence(seed, spawn_key=key)


def run_batch(
    study: StudyData,
    losses,
    kernels,
    method="pearson3",
    mc_reps=10000,
    seed=None,
    add_intercept=True,
    weights=None,
    beta_params=(1.0, 25.0),
    custom_kernel=None,
    threads=1,
    max_iter=200,
    tol=1e-8,
) -> pd.DataFrame:
    """Tests every (loss, SNP set, kernel) combination of a study.

    The null model does not involve the genotypes, so it is fitted once per
    loss. Kernels are built once per (set, kernel) and shared by all losses.
    A custom kernel is tested once, under the set name of its file stem. A
    failing row keeps its place in the table with the message in ``error``.

    Args:
        study         (StudyData): aligned inputs
        losses        (list)     : LossSpec values (a single LossSpec is accepted)
        kernels       (list)     : kernel kinds, e.g. ["linear", "quadratic", "ibs"]
        method        (str)      : pearson3 / exact / mc
        weights       (str)      : None or "beta" (Beta MAF weights for linear/quadratic)
        custom_kernel (str)      : path of a kernel file, needed for kind "custom"
        threads       (int)      : worker threads over (set, kernel) pairs

    Returns:
        DataFrame: one row per loss x set x kernel in set, kernel, loss order

            > run_batch(study, [LossSpec.huber()], ["linear", "ibs"])
                 set kernel          loss   n  n_snps  statistic    pvalue    method  converged  degenerate error
            0  GENE1 linear  huber(1.345)  300      9  1.281e+03  0.184201  pearson3       True       False  None
            1  GENE1    ibs  huber(1.345)  300      9  6.413e+00  0.096374  pearson3       True       False  None
    """
    if isinstance(losses, LossSpec):
        losses = [losses]
    losses = list(losses)
    kernels = [KernelKind(k) for k in kernels]
    method = Method(method)
    if not losses or not kernels:
        raise InputError("at least one loss and one kernel are required")
    if KernelKind.CUSTOM in kernels and custom_kernel is None:
        raise InputError("kernel 'custom' needs a kernel file")

    Y = study.phenotype
    X = design_matrix(study.covariates.to_numpy(dtype=float), study.n, add_intercept)
    fits = [null_fit_row(Y, X, loss, max_iter, tol) for loss in losses]
    for loss, fit in zip(losses, fits):
        if "fit" in fit and not fit["fit"].converged:
            logging.warning("null fit under %s did not converge", loss)

    pairs = []
    for kernel_index, kind in enumerate(kernels):
        if kind is KernelKind.CUSTOM:
            pairs.append((Path(custom_kernel).stem, None, kernel_index, kind))
        else:
            for name, snps in study.snp_sets.items():
                pairs.append((name, snps, kernel_index, kind))
    if not pairs:
        raise InputError("no SNP sets to test")
    order = {name: i for i, name in enumerate(dict.fromkeys(p[0] for p in pairs))}
    pairs.sort(key=lambda pair: (order[pair[0]], pair[2]))

    def run_pair(pair):
        name, snps, kernel_index, kind = pair
        if kind is KernelKind.CUSTOM:
            ready = _custom_row(custom_kernel, study.sample_ids)
        else:
            ready = kernel_row(study, snps, kind, weights, beta_params)
        rows = []
        for loss_index, (loss, fit) in enumerate(zip(losses, fits)):
            row = {
                "set": name,
                "kernel": kind.value,
                "loss": str(loss),
                "n": study.n,
                "n_snps": len(snps) if snps is not None else None,
                "method": method.value,
            }
            if "error" in fit:
                row.update(fit)
            elif "error" in ready:
                row.update(ready)
            else:
                seed_seq = mc_seed(seed, loss_index, kernel_index, name)
                row.update(association_row(fit["fit"], ready, method, mc_reps, seed_seq))
            rows.append(row)
        return rows

    # map keeps set order whatever the completion order
    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = [row for batch in pool.map(run_pair, pairs) for row in batch]

    table = pd.DataFrame(rows)
    for column in BATCH_COLUMNS + ["failure"]:
        if column not in table:
            table[column] = None
    failed = int(table["error"].notna().sum())
    logging.info("batch: %d tests, %d failed", len(table), failed)
    return table[BATCH_COLUMNS + ["failure"]]


@failed_row_handler
def _custom_row(path, sample_ids):
    Kc = center_kernel(read_custom_kernel(path, expected_ids=sample_ids))
    return {"kernel": Kc, "calculator": PermutationMomentCalculator(Kc)}
