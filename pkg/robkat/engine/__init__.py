from .fit import NullFit, fit_null, proposal2_scale, score_vector
from .kernel import (
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
from .loss import LossFamily, LossSpec, expected_psi_sq, psi, psi_weight, rho
from .permutation import (
    PermutationMomentCalculator,
    PermutationMoments,
    exact_permutation_pvalue,
    monte_carlo_pvalue,
    pearson3_pvalue,
    permutation_moments,
    test_statistic,
)
