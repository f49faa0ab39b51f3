"""Capacity bounds, decoding experiments, and numerical certification for
Gaussian ISI channels whose taps drift inside known intervals."""

from .errors import (
    BoundInapplicable,
    CodebookTooLarge,
    ConfigError,
    DimensionMismatch,
    IsicapError,
    NoConvergence,
    NotPositiveDefinite,
    SpectrumSingular,
)
from .spectrum import (
    BandedChannelMatrix,
    ChannelSpec,
    SpectrumProfile,
    build_Hc,
    compute_profile,
    eval_f_sq,
    gram_eigenvalues,
    gram_matrix,
)
from .waterfill import (
    BoundReport,
    FiniteNBound,
    WaterfillSolution,
    bound_report,
    capacity_C0,
    dbw_to_watts,
    delta_i,
    finite_n_bound,
    g_integral,
    pillow_bound,
    pillow_terms,
    saturation_power,
    solve_theta1,
    solve_theta2,
    watts_to_dbw,
)
from .channel_sim import (
    ChannelLaw,
    Codebook,
    CovarianceSpec,
    build_sigma,
    dump_trial,
    gen_codebook,
    load_trial,
    rng_stream,
    sample_H,
    transmit,
)
from .decoder import (
    DecodeFailure,
    ExperimentResult,
    JointCovariance,
    ThresholdReport,
    TypicalParams,
    build_joint,
    decode,
    default_params,
    is_typical,
    run_error_experiment,
    thresholds,
    wilson_interval,
)
from .verify import (
    SUITE_NAMES,
    ConverseReport,
    LemmaReport,
    NormBundle,
    VolumeResult,
    check_banded_norm_bounds,
    check_lemma1,
    check_trace_bounds,
    check_weyl_det,
    converse_rate_bound,
    norms,
    qcqp_min,
    run_all_suites,
    run_suite,
    typical_volume,
    verify_report,
)

__version__ = "0.1.0"
