"""Adaptive tracking control with a residual network drift estimate.

The network output approximates the unknown drift of ``x' = f(x) + u`` and
every layer's weights adapt online from the tracking error. Kernels run under
numba when it is installed; set ``RESNET_AC_NUMBA=0`` for the pure numpy path.
"""

__version__ = "0.1.0"

from ._accel import USE_NUMBA, backend_name
from .control import Gains, control_input, lyapunov_value, sgn, tracking_error
from .jacobian import finite_diff_jacobian, gradcheck, gradient_norm_profile, resnet_jacobian
from .montecarlo import BatchFailure, BatchResult, compare_architectures, run_batch
from .plant import PlantModel, ReferenceSpec, drift, feature_map, reference, sample_plant
from .resnet import (BlockSpec, LayoutError, NumericalOverflowError, ResNetSpec, WeightVector,
                     init_weights, resnet_forward, unvec, vec)
from .sim import DivergenceError, SimConfig, TrajectoryLog, metrics, run_episode, step

__all__ = [
    "USE_NUMBA", "backend_name", "Gains", "control_input", "lyapunov_value", "sgn",
    "tracking_error", "finite_diff_jacobian", "gradcheck", "gradient_norm_profile",
    "resnet_jacobian", "BatchFailure", "BatchResult", "compare_architectures", "run_batch",
    "PlantModel", "ReferenceSpec", "drift", "feature_map", "reference", "sample_plant",
    "BlockSpec", "LayoutError", "NumericalOverflowError", "ResNetSpec", "WeightVector",
    "init_weights", "resnet_forward", "unvec", "vec", "DivergenceError", "SimConfig",
    "TrajectoryLog", "metrics", "run_episode", "step",
]
