"""Receiver laboratory for uplink multicarrier CDMA with two-antenna
block coding: closed-form MMSE detection, LMS-family adaptive baselines,
and a genetic-algorithm receiver built on the conjugate symmetry between
the two optimum filters.
"""

__version__ = "0.1.0"

from .airlink import (
    ChannelRealization,
    SignatureSet,
    SystemConfig,
    build_signatures,
    draw_symbols,
    generate_channel,
    generate_spreading_codes,
    snr_to_noise_variance,
    synthesize_received,
    two_interval_oracle,
)
from .errors import ConfigError, DimensionError, DomainError, SingularMatrixError
from .ga import GaConfig, GaTrace, Individual, Population, run_ga
from .harness import (
    CurveData,
    ExperimentConfig,
    emit_curves,
    run_ber_vs_snr,
    run_mse_vs_cycles,
)
from .numerics import SeededRng, gaussian_complex, hermitian_solve, outer_accumulate
from .receivers import (
    AutocorrMatrix,
    FullWeights,
    TrainingBatch,
    WeightPair,
    analytic_autocorrelation,
    detect,
    expand_weights,
    fast_lms_step,
    lms_step,
    mmse_cost,
    mmse_weights,
    reduced_cost,
    reduced_cost_gradient,
    verify_block_symmetry,
)

__all__ = [
    "__version__",
    "AutocorrMatrix",
    "ChannelRealization",
    "ConfigError",
    "CurveData",
    "DimensionError",
    "DomainError",
    "ExperimentConfig",
    "FullWeights",
    "GaConfig",
    "GaTrace",
    "Individual",
    "Population",
    "SeededRng",
    "SignatureSet",
    "SingularMatrixError",
    "SystemConfig",
    "TrainingBatch",
    "WeightPair",
    "analytic_autocorrelation",
    "build_signatures",
    "detect",
    "draw_symbols",
    "emit_curves",
    "expand_weights",
    "fast_lms_step",
    "gaussian_complex",
    "generate_channel",
    "generate_spreading_codes",
    "hermitian_solve",
    "lms_step",
    "mmse_cost",
    "mmse_weights",
    "outer_accumulate",
    "reduced_cost",
    "reduced_cost_gradient",
    "run_ber_vs_snr",
    "run_ga",
    "run_mse_vs_cycles",
    "snr_to_noise_variance",
    "synthesize_received",
    "two_interval_oracle",
    "verify_block_symmetry",
]
