"""
scldpc Utils - Re-exports from util_deps.

This module provides the public API surface for scldpc utilities.
All implementation lives in util_deps/ subdirectory.
"""
from .util_deps.config import (
    PACKAGE_VERSION,
    PUBLISHED_THRESHOLD,
    PUBLISHED_GAMMA,
    PUBLISHED_TAU_RATIO,
    PUBLISHED_DELTA1,
    PUBLISHED_ALPHA,
    PUBLISHED_THETA,
    PUBLISHED_THETA_STRETCHED,
    PUBLISHED_COUPLED_THRESHOLD,
    PUBLISHED_M_SL,
)

from .util_deps.loader import (
    load_lab_config,
    init_config_dir,
    merge_dicts,
    cache_key,
    ResultCache,
)

from .util_deps.ensemble import (
    sample_graph,
    design_rate,
    degree_pmfs,
    boundary_degree_pmf,
    socket_occupancy,
    empirical_degree_pmf,
    empirical_design_rate,
    check_degree_histogram,
)

from .util_deps.peeling import (
    PeelingState,
    transmit_and_initialize,
    degree_distribution,
    peel_steps,
    peel_to_end,
    decode_trial,
    simulate_trials,
    run_monte_carlo,
    classify_failure,
    empirical_temporal_covariance,
)

from .util_deps.mean_evolution import (
    initial_mean,
    drift,
    drift_jvp,
    jacobian,
    jacobian_fd,
    drift_context,
    position_profile,
    integrate_mean,
    steady_state_value,
    threshold,
    gamma_param,
)

from .util_deps.uncoupled import (
    binsearch,
    stall_fixed_point,
    tau_lower_bound,
    gamma_from_speed,
    uncoupled_bp_threshold,
    estimate_wave_coefficient,
)

from .util_deps.covariance import (
    initial_covariance,
    second_moment_drift,
    psd_probe,
    integrate_covariance,
    delta1_star_param,
    ratio_alpha,
)

from .util_deps.temporal import (
    sample_dd_at,
    phi_estimator,
    fit_theta,
    theta_from_trajectories,
    theta_param,
)

from .util_deps.scaling_law import (
    mu0,
    mu0_upper_bound,
    ou_params_from_scaling,
    published_scaling_params,
    predict_block_error,
    predict_curve,
    predict_M_rescaling,
    predict_L_rescaling,
    calibrate_m_sl,
    waterfall_slope,
    simulate_ou,
    sample_first_passage_times,
)

from .util_deps.formatters import (
    write_csv,
    write_json,
    format_manifest_table,
)

from .util_deps.reproduce import (
    TARGETS,
    run_target,
)

__all__ = [
    # Config
    "PACKAGE_VERSION",
    "PUBLISHED_THRESHOLD",
    "PUBLISHED_GAMMA",
    "PUBLISHED_TAU_RATIO",
    "PUBLISHED_DELTA1",
    "PUBLISHED_ALPHA",
    "PUBLISHED_THETA",
    "PUBLISHED_THETA_STRETCHED",
    "PUBLISHED_COUPLED_THRESHOLD",
    "PUBLISHED_M_SL",
    # Loader
    "load_lab_config",
    "init_config_dir",
    "merge_dicts",
    "cache_key",
    "ResultCache",
    # Ensemble
    "sample_graph",
    "design_rate",
    "degree_pmfs",
    "boundary_degree_pmf",
    "socket_occupancy",
    "empirical_degree_pmf",
    "empirical_design_rate",
    "check_degree_histogram",
    # Peeling
    "PeelingState",
    "transmit_and_initialize",
    "degree_distribution",
    "peel_steps",
    "peel_to_end",
    "decode_trial",
    "simulate_trials",
    "run_monte_carlo",
    "classify_failure",
    "empirical_temporal_covariance",
    # Mean evolution
    "initial_mean",
    "drift",
    "drift_jvp",
    "jacobian",
    "jacobian_fd",
    "drift_context",
    "position_profile",
    "integrate_mean",
    "steady_state_value",
    "threshold",
    "gamma_param",
    # Uncoupled DE
    "binsearch",
    "stall_fixed_point",
    "tau_lower_bound",
    "gamma_from_speed",
    "uncoupled_bp_threshold",
    "estimate_wave_coefficient",
    # Covariance
    "initial_covariance",
    "second_moment_drift",
    "psd_probe",
    "integrate_covariance",
    "delta1_star_param",
    "ratio_alpha",
    # Temporal covariance
    "sample_dd_at",
    "phi_estimator",
    "fit_theta",
    "theta_from_trajectories",
    "theta_param",
    # Scaling law
    "mu0",
    "mu0_upper_bound",
    "ou_params_from_scaling",
    "published_scaling_params",
    "predict_block_error",
    "predict_curve",
    "predict_M_rescaling",
    "predict_L_rescaling",
    "calibrate_m_sl",
    "waterfall_slope",
    "simulate_ou",
    "sample_first_passage_times",
    # Formatters
    "write_csv",
    "write_json",
    "format_manifest_table",
    # Reproduction
    "TARGETS",
    "run_target",
]
