from .generate import ErrorDist, HForm, gen_errors, gen_genotypes, h_linear, h_nonlinear
from .sim_api import SIM_COLUMNS, SimConfig, run_simulation
