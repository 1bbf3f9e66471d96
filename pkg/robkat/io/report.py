import numpy as np
import pandas as pd

from robkat.comm.errors import InputError
from robkat.io.batch import BATCH_COLUMNS


def format_statistic(value):
    if value is None or pd.isna(value):
        return "NA"
    return f"{value:.6g}"


def format_pvalue(value):
    """Six significant digits, scientific notation below 1e-4.

    Returns:
        str:

            > format_pvalue(2.2314e-06)
            '2.2314e-06'
    """
    if value is None or pd.isna(value):
        return "NA"
    if value < 1e-4:
        return f"{value:.4e}"
    return f"{value:.6g}"


def bonferroni_threshold(alpha, n_tests):
    if not 0 < alpha <= 1:
        raise InputError(f"alpha must lie in (0, 1], got {alpha}")
    if n_tests < 1:
        raise InputError("need at least one test for a Bonferroni threshold")
    return alpha / n_tests


def format_report(results: pd.DataFrame, alpha=None, n_tests=None) -> pd.DataFrame:
    """String table in output column order, with optional Bonferroni columns.

    ``n_tests`` defaults to the number of rows.
    """
    if results is None or len(results) == 0:
        raise InputError("no results to report")
    table = pd.DataFrame(
        {column: results[column] if column in results else None for column in BATCH_COLUMNS}
    )
    pvalues = pd.to_numeric(table["pvalue"], errors="coerce")
    table["statistic"] = pd.to_numeric(table["statistic"], errors="coerce").map(format_statistic)
    table["pvalue"] = pvalues.map(format_pvalue)
    table["n_snps"] = pd.to_numeric(table["n_snps"], errors="coerce").astype("Int64")
    table["error"] = table["error"].fillna("")
    if alpha is not None:
        threshold = bonferroni_threshold(alpha, n_tests or len(table))
        table["threshold"] = format_statistic(threshold)
        table["significant"] = np.where(pvalues.notna(), pvalues <= threshold, False)
    return table


def emit_report(results: pd.DataFrame, path, alpha=None, n_tests=None):
    """Writes batch results as a tab-separated file.

    Returns:
        DataFrame: the formatted table as written

            > emit_report(results, "out.tsv", alpha=0.05)["threshold"][0]
            '0.00138889'
    """
    table = format_report(results, alpha, n_tests)
    write_tsv(table, path)
    return table


def write_tsv(table: pd.DataFrame, path, float_format=None):
    try:
        table.to_csv(path, sep="\t", index=False, na_rep="NA", float_format=float_format)
    except OSError as e:
        raise InputError(f"cannot write {path}: {e}") from e


def emit_simulation_report(table: pd.DataFrame, path):
    """Writes a run_simulation table (rates and standard errors to 6 significant digits)."""
    if table is None or len(table) == 0:
        raise InputError("no simulation results to report")
    write_tsv(table, path, float_format="%.6g")
    return table
