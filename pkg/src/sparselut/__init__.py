"""Fixed fan-in connectivity optimization for LUT-style quantized networks.

The package derives per-neuron sparsity masks by dynamic rewiring, retrains
quantized polynomial-neuron networks under a frozen mask, and compiles every
neuron into an exhaustive truth table plus synthesizable RTL.
"""

from sparselut._backend import backend_name
from sparselut.errors import CapacityError, FormatError, SparseLutError, StateError
from sparselut.numerics import (
    AdamW,
    QuantizerSpec,
    RngStream,
    quantize,
    quantize_grad,
    standard_normal_matrix,
)
from sparselut.rewiring import (
    ConnectionState,
    FeatureMask,
    RewiringSchedule,
    apply_stochastic_update,
    deepr_star_step,
    effective_weights,
    extract_mask,
    hard_deactivate,
    init_connection_state,
    init_random_mask,
    penalize,
    regrow,
    residual,
    sparselut_step,
)

__version__ = "0.1.0"
