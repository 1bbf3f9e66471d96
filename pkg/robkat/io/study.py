import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from robkat.comm.errors import InputError, ParseError
from robkat.engine.kernel import GenotypeMatrix, KernelKind

SAMPLE_ID = "sample_id"


def read_sample_table(path) -> pd.DataFrame:
    """Reads a tab-separated file keyed by ``sample_id`` into a float frame.

    ``NA`` and empty fields become NaN. Any other non-numeric field raises a
    ParseError naming its 1-based line (the header is line 1).
    """
    try:
        raw = pd.read_csv(
            path, sep="\t", dtype=str, na_values=["NA", ""], keep_default_na=False
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"{path}: {e}") from e
    if len(raw.columns) == 0 or raw.columns[0] != SAMPLE_ID:
        raise InputError(f"{path}: first column must be '{SAMPLE_ID}'")
    ids = raw[SAMPLE_ID].astype(str).str.strip()
    duplicated = ids[ids.duplicated()]
    if len(duplicated):
        raise InputError(f"{path}: duplicate sample ID '{duplicated.iloc[0]}'")

    values = raw.drop(columns=SAMPLE_ID)
    numeric = values.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna() & values.notna()
    if bad.to_numpy().any():
        row, col = np.argwhere(bad.to_numpy())[0]
        column = values.columns[col]
        raise ParseError(path, int(row) + 2, column, values.iat[row, col])
    numeric.index = pd.Index(ids, name=SAMPLE_ID)
    return numeric.astype(float)


def read_snp_sets(path) -> dict:
    """Reads (set_name, snp_id) pairs, keeping sets and members in file order."""
    try:
        raw = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"{path}: {e}") from e
    if list(raw.columns[:2]) != ["set_name", "snp_id"]:
        raise InputError(f"{path}: expected columns 'set_name' and 'snp_id'")
    sets = {}
    for name, snp in zip(raw["set_name"].str.strip(), raw["snp_id"].str.strip()):
        members = sets.setdefault(name, [])
        if snp not in members:
            members.append(snp)
    return {name: tuple(members) for name, members in sets.items()}


@dataclass(frozen=True)
class StudyData:
    """Phenotype, covariates and genotypes aligned on sorted sample IDs.

    Genotypes keep NaN for missing calls; ``genotype_matrix`` imputes them
    per kernel when a set is tested.
    """

    sample_ids: tuple
    phenotype: np.ndarray
    covariates: pd.DataFrame
    genotypes: pd.DataFrame
    snp_sets: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.sample_ids)

    def genotype_matrix(self, snps, kind) -> GenotypeMatrix:
        """Genotypes of ``snps``; IBS fills missing calls with the mode, others with the mean."""
        impute = "mode" if KernelKind(kind) is KernelKind.IBS else "mean"
        return GenotypeMatrix.from_frame(self.genotypes.loc[:, list(snps)], impute)


def load_study(pheno_path, covar_path=None, geno_path=None, sets_path=None) -> StudyData:
    """Loads and aligns the input files of a batch.

    Samples with a missing phenotype or covariate are dropped. The remaining
    files are inner-joined on sample ID and sorted by it. SNP-set members
    absent from the genotype file are dropped with a warning. Without a set
    file every genotyped SNP forms one set named ``all``.

    Returns:
        StudyData:

            > load_study("pheno.tsv", "covar.tsv", "geno.tsv", "sets.tsv").n
            3
    """
    pheno = read_sample_table(pheno_path)
    if pheno.shape[1] == 0:
        raise InputError(f"{pheno_path}: no phenotype column")
    if pheno.shape[1] > 1:
        logging.info("%s: using phenotype column '%s'", pheno_path, pheno.columns[0])
    pheno = pheno.iloc[:, 0].dropna()

    covar = read_sample_table(covar_path).dropna() if covar_path else None
    geno = read_sample_table(geno_path) if geno_path else None
    if geno is not None:
        outside = geno.columns[((geno < 0) | (geno > 2)).any(axis=0)]
        if len(outside):
            raise InputError(f"{geno_path}: SNP '{outside[0]}' has counts outside 0/1/2")

    ids = pheno.index
    for frame in (covar, geno):
        if frame is not None:
            ids = ids.intersection(frame.index)
    ids = ids.sort_values()
    if len(ids) == 0:
        raise InputError("no sample is present in every input file")

    covariates = covar.loc[ids] if covar is not None else pd.DataFrame(index=ids)
    genotypes = geno.loc[ids] if geno is not None else pd.DataFrame(index=ids)
    if len(ids) < covariates.shape[1] + 2:
        raise InputError(
            f"{len(ids)} samples remain, need at least {covariates.shape[1] + 2}"
        )
    logging.info("study: %d samples, %d covariates, %d SNPs",
                 len(ids), covariates.shape[1], genotypes.shape[1])

    if sets_path:
        snp_sets = {}
        known = set(genotypes.columns)
        for name, members in read_snp_sets(sets_path).items():
            for snp in members:
                if snp not in known:
                    logging.warning("set %s: SNP %s is not in the genotype file", name, snp)
            present = tuple(snp for snp in members if snp in known)
            if not present:
                logging.warning("set %s has no genotyped SNPs", name)
            snp_sets[name] = present
    elif genotypes.shape[1]:
        snp_sets = {"all": tuple(genotypes.columns)}
    else:
        snp_sets = {}

    return StudyData(
        sample_ids=tuple(ids),
        phenotype=pheno.loc[ids].to_numpy(dtype=float),
        covariates=covariates,
        genotypes=genotypes,
        snp_sets=snp_sets,
    )
