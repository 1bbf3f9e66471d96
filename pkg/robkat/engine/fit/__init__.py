from .core import IrlsFitter, LadFitter, NullFit, irls_step, normalized_mad, proposal2_scale
from .wrap import fit_null, score_vector
