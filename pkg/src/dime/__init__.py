"""Matrix-based Renyi entropy and the DiME dependence measure."""

__version__ = "0.1.0"

from .entropy import (
    EntropyOrder,
    conditional_entropy,
    joint_entropy,
    matrix_entropy,
    matrix_mutual_information,
    spectrum,
)
from .errors import (
    DegenerateAnchorError,
    DimeError,
    NumericalError,
    OptimizerDivergenceError,
    PSDViolationError,
    RejectedInputError,
    SolverError,
)
from .estimator import (
    BandwidthParams,
    DimeEstimate,
    PermutationSet,
    dime,
    dime_gradient,
    independence_test,
    optimize_bandwidth,
    permuted_joint_entropy,
    sample_permutations,
)
from .kernels import KernelFamily, KernelSpec, entrywise_power, evaluate_kernel, gram_matrix, hadamard
from .synthdata import GaussianPairConfig, rho_for_mi, sample_correlated_gaussian, true_mi

__all__ = [
    "BandwidthParams",
    "DegenerateAnchorError",
    "DimeError",
    "DimeEstimate",
    "EntropyOrder",
    "GaussianPairConfig",
    "KernelFamily",
    "KernelSpec",
    "NumericalError",
    "OptimizerDivergenceError",
    "PSDViolationError",
    "PermutationSet",
    "RejectedInputError",
    "SolverError",
    "conditional_entropy",
    "dime",
    "dime_gradient",
    "entrywise_power",
    "evaluate_kernel",
    "gram_matrix",
    "hadamard",
    "independence_test",
    "joint_entropy",
    "matrix_entropy",
    "matrix_mutual_information",
    "optimize_bandwidth",
    "permuted_joint_entropy",
    "rho_for_mi",
    "sample_correlated_gaussian",
    "sample_permutations",
    "spectrum",
    "true_mi",
]
