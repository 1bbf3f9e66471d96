from .assoc import Method, TestResult, robkat_test, skat_test
from .engine import (
    GenotypeMatrix,
    KernelKind,
    KernelMatrix,
    LossSpec,
    NullFit,
    PermutationMoments,
    center_kernel,
    fit_null,
    permutation_moments,
    pearson3_pvalue,
    score_vector,
    test_statistic,
)
from .io import emit_report, load_study, run_batch
from .sim import SimConfig, run_simulation

__all__ = [
    "GenotypeMatrix",
    "KernelKind",
    "KernelMatrix",
    "LossSpec",
    "Method",
    "NullFit",
    "PermutationMoments",
    "SimConfig",
    "TestResult",
    "center_kernel",
    "emit_report",
    "fit_null",
    "load_study",
    "pearson3_pvalue",
    "permutation_moments",
    "robkat_test",
    "run_batch",
    "run_simulation",
    "score_vector",
    "skat_test",
    "test_statistic",
]

try:
    from importlib.metadata import version

    __version__ = version("robkat")
except Exception:
    # source checkouts without installed metadata
    __version__ = "0.0.0+unknown"
