"""EPR-steering shareability analysis for few-qubit states."""

__version__ = "0.1.0"

from .entanglement import ShareabilityVerdict, WitnessReport, genuine_by_shareability, witness_value
from .linalg import (
    DensityMatrix,
    Ket,
    expectation,
    fidelity,
    nearest_physical_state,
    partial_trace,
    tensor_product,
)
from .measurement import (
    CountsRecord,
    EstimateWithError,
    estimate_moments,
    estimate_steering_matrix,
    estimate_steering_parameter,
    simulate_counts,
    tomography_reconstruct,
)
from .states import (
    CoefficientTriple,
    PrepParams,
    coefficients_to_hwp,
    depolarize,
    ghz_like_state,
    hwp_to_coefficients,
    pipeline_state,
    w_like_state,
    w_n_state,
)
from .steering import (
    SteeringConfiguration,
    SteeringMatrix,
    SteeringValue,
    classify_configuration,
    min_variance_bound,
    pair_moments,
    steering_matrix,
    steering_parameter,
    sweep_region_map,
)

__all__ = [
    "CoefficientTriple",
    "CountsRecord",
    "DensityMatrix",
    "EstimateWithError",
    "Ket",
    "PrepParams",
    "ShareabilityVerdict",
    "SteeringConfiguration",
    "SteeringMatrix",
    "SteeringValue",
    "WitnessReport",
    "__version__",
    "classify_configuration",
    "coefficients_to_hwp",
    "depolarize",
    "estimate_moments",
    "estimate_steering_matrix",
    "estimate_steering_parameter",
    "expectation",
    "fidelity",
    "genuine_by_shareability",
    "ghz_like_state",
    "hwp_to_coefficients",
    "min_variance_bound",
    "nearest_physical_state",
    "pair_moments",
    "partial_trace",
    "pipeline_state",
    "simulate_counts",
    "steering_matrix",
    "steering_parameter",
    "sweep_region_map",
    "tensor_product",
    "tomography_reconstruct",
    "w_like_state",
    "w_n_state",
    "witness_value",
]
