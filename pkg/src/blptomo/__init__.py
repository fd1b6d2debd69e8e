"""BLP non-Markovianity from prepared-state dynamics, with an open quantum walk simulator."""
from .errors import DatasetFormatError, OptimizerError, ValidationError
from .measure import (
    BLPResult,
    DistanceTrajectory,
    OptimizerOptions,
    blp_functional,
    distance_trajectory,
    grid_scan_qubit,
    optimize_pair,
    trace_distance,
)
from .tomography import (
    CoefficientVector,
    DynamicsDataset,
    Label,
    basis_operators,
    decompose,
    prepared_states,
    recover_basis_dynamics,
    reconstruct_dynamics,
)
from .walk import QWConfig, evolve_reduced, generate_prepared_dataset

__version__ = "0.1.0"

__all__ = [
    "BLPResult",
    "CoefficientVector",
    "DatasetFormatError",
    "DistanceTrajectory",
    "DynamicsDataset",
    "Label",
    "OptimizerError",
    "OptimizerOptions",
    "QWConfig",
    "ValidationError",
    "basis_operators",
    "blp_functional",
    "decompose",
    "distance_trajectory",
    "evolve_reduced",
    "generate_prepared_dataset",
    "grid_scan_qubit",
    "optimize_pair",
    "prepared_states",
    "recover_basis_dynamics",
    "reconstruct_dynamics",
    "trace_distance",
]
