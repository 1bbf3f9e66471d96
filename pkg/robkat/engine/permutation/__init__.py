from .core import (
    ENUMERATION_LIMIT,
    PermutationMomentCalculator,
    PermutationMoments,
    pattern_lattice,
)
from .wrap import (
    exact_permutation_moments,
    exact_permutation_pvalue,
    monte_carlo_pvalue,
    pearson3_pvalue,
    permutation_moments,
    test_statistic,
)
