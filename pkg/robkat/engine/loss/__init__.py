from .core import DEFAULT_TUNING, LAD_WEIGHT_FLOOR, LossFamily, LossSpec
from .wrap import expected_psi_sq, psi, psi_weight, rho
