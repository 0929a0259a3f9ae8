"""Weighted sum-rate transceiver design for the K-user MIMO interference
channel: alternating weighted-MMSE optimization under sum or per-node power
constraints, robust variants for imperfect CSI, reference baselines, and a
seeded Monte Carlo harness with closed-form complexity/feedback models."""

from .backend import BACKEND
from .channel import (
    ChannelSet,
    MismatchedChannels,
    NetworkDims,
    apply_mismatch,
    generate_channels,
    snr_to_sigma_h,
)
from .filters import (
    DegenerateInputError,
    PerNodePower,
    PowerConstraint,
    SumPower,
    TransceiverState,
    achievable_rate,
    empirical_mse,
    error_covariance,
    interference_cov,
    mmse_receiver,
    mse_matrix,
    mse_weights,
    per_node_power,
    per_node_precoder,
    rate_from_error,
    sum_power_precoders,
    wmse_objective,
)
from .robust import (
    RobustContext,
    robust_error_covariance,
    robust_per_node_precoder,
    robust_receiver,
    robust_sum_power_precoders,
    robust_weights,
)
from .optimizer import (
    OptimizerConfig,
    OptimizerTrace,
    initialize_precoders,
    run_algorithm1,
    weighted_sum_rate,
)
from .baselines import (
    GradientConfig,
    fd_wsr_gradient,
    projected_gradient_wsr,
    simple_mmse_run,
    wsr_gradient,
)
from .complexity import (
    ComplexityParams,
    FeedbackAmounts,
    cholesky_cost,
    feedback_amounts,
    feedback_crossover,
    gradient_stage_costs,
    inversion_cost,
    svd_cost,
    total_multiplications,
    wmmse_stage_costs,
)
from .harness import (
    ExperimentSpec,
    ResultRow,
    ResultTable,
    RobustSettings,
    emit_csv,
    load_spec_file,
    run_cells,
    run_experiment,
    spec_from_mapping,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChannelSet",
    "MismatchedChannels",
    "NetworkDims",
    "apply_mismatch",
    "generate_channels",
    "snr_to_sigma_h",
    "DegenerateInputError",
    "PerNodePower",
    "PowerConstraint",
    "SumPower",
    "TransceiverState",
    "achievable_rate",
    "empirical_mse",
    "error_covariance",
    "interference_cov",
    "mmse_receiver",
    "mse_matrix",
    "mse_weights",
    "per_node_power",
    "per_node_precoder",
    "rate_from_error",
    "sum_power_precoders",
    "wmse_objective",
    "RobustContext",
    "robust_error_covariance",
    "robust_per_node_precoder",
    "robust_receiver",
    "robust_sum_power_precoders",
    "robust_weights",
    "OptimizerConfig",
    "OptimizerTrace",
    "initialize_precoders",
    "run_algorithm1",
    "weighted_sum_rate",
    "GradientConfig",
    "fd_wsr_gradient",
    "projected_gradient_wsr",
    "simple_mmse_run",
    "wsr_gradient",
    "ComplexityParams",
    "FeedbackAmounts",
    "cholesky_cost",
    "feedback_amounts",
    "feedback_crossover",
    "gradient_stage_costs",
    "inversion_cost",
    "svd_cost",
    "total_multiplications",
    "wmmse_stage_costs",
    "ExperimentSpec",
    "ResultRow",
    "ResultTable",
    "RobustSettings",
    "emit_csv",
    "load_spec_file",
    "run_cells",
    "run_experiment",
    "spec_from_mapping",
    "__version__",
]
