"""Weighted prototype selection and criticism under the MMD objective."""

from .errors import (
    DegenerateDataError,
    GuardError,
    InputError,
    NumericError,
    ProtoSelectError,
    SolverError,
)
from .kernel import (
    Dataset,
    KernelMatrix,
    KernelSpec,
    MeanMap,
    kernel_eval,
    kernel_matrix,
    mean_map,
    median_bandwidth,
)
from .nnqp import (
    SolverConfig,
    SupportSet,
    WeightVector,
    gradient,
    kkt_residual,
    objective,
    solve_restricted,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DegenerateDataError",
    "GuardError",
    "InputError",
    "KernelMatrix",
    "KernelSpec",
    "MeanMap",
    "NumericError",
    "ProtoSelectError",
    "SolverConfig",
    "SolverError",
    "SupportSet",
    "WeightVector",
    "gradient",
    "kernel_eval",
    "kernel_matrix",
    "kkt_residual",
    "mean_map",
    "median_bandwidth",
    "objective",
    "solve_restricted",
    "__version__",
]
