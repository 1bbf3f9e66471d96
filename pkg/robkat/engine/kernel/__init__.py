from .core import GenotypeMatrix, KernelKind, KernelMatrix, impute_genotypes
from .wrap import (
    PsdCheck,
    beta_maf_weights,
    build_kernel,
    center_kernel,
    ibs_kernel,
    linear_kernel,
    quadratic_kernel,
    read_custom_kernel,
    validate_psd,
)
