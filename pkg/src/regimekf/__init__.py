"""Filters and smoothers for Markov-switching linear Gaussian state space models.

Collapsed-history filter families (GPB and IMM at any order), an exact
full-history oracle, matching probability and state smoothers, a
deterministic simulator, and a Monte-Carlo evaluation harness.
"""
from .errors import (
    AbsorbingRegimeError,
    DataFormatError,
    DimensionMismatchError,
    HistoryCapError,
    LyapunovDivergenceError,
    MissingRetentionError,
    NonStochasticRowError,
    ReducibleChainError,
    RegimeKFError,
    SingularInnovationError,
    WeightUnderflowError,
)
from .exact import exact_run
from .fusion import (
    FilterRun,
    FilterStepOutput,
    HistoryPosterior,
    PredictedStep,
    collapse,
    default_posterior,
    expand_update,
    fuse,
    merge_moments,
)
from .gpb import gpb_init, gpb_run, gpb_step
from .imm import MixingWeights, imm_init, imm_mix, imm_mixing_probs, imm_run, imm_step
from .kalman import GaussianBelief, UpdateStats, gaussian_loglik, kf_forecast, kf_update
from .metrics import (
    AlgoResult,
    AlgoSpec,
    MetricReport,
    bootstrap_mean_lower,
    monte_carlo,
    relative_rmse,
    rmse,
)
from .model import (
    MarkovChain,
    MSStateSpace,
    ObservationSeries,
    RegimeParams,
    decode_history,
    drop_oldest,
    encode_history,
    expected_duration,
    extend_history,
    grand_transition,
    n_histories,
    newest_regime,
    oldest_regime,
    regime_stationary_cov,
    regime_stationary_mean,
    shift_history,
    stationary_distribution,
    stationary_history_weights,
    stationary_state_cov,
    validate_model,
)
from .simulate import SimOutput, simulate, simulate_chain, simulate_ssm
from .smoothing import SmootherRun, smooth_probabilities, smooth_run, smooth_states

__version__ = "0.1.0"
