"""OFDM residual carrier/clock offset estimation and Monte-Carlo evaluation.

Layers: :mod:`modem` (tone mapping and cyclic-prefix framing),
:mod:`channel` (Rayleigh realizations, offset impairment, noise),
:mod:`estimator` (the region-pairwise phase estimator plus a scikit-learn
style wrapper), :mod:`variance` (closed-form performance predictors) and
:mod:`harness` (seeded scenarios, sweeps, CSV emission).
"""

from .channel import (
    ChannelRealization,
    add_awgn,
    apply_impairments_freq,
    apply_impairments_time,
    exponential_power_profile,
    flat_channel,
    generate_taps,
    perturb_csi,
    tone_phase_ramp,
)
from .config import Constellation, ImpairmentParams, SystemConfig, parse_constellation
from .estimator import (
    SIMPLIFIED,
    WEIGHTED,
    EstimateReport,
    RegionPlan,
    ResidualOffsetEstimator,
    block_phase_intercept,
    block_phase_slope,
    estimate,
    extract_phases,
    fit_offset_pair,
    fit_phase_ramp,
    pair_correlation,
    pair_weight,
    plan_regions,
    stack_region,
)
from .harness import (
    SPEED_OF_LIGHT,
    MseRow,
    Scenario,
    doppler_hz_for_speed,
    emit_csv,
    parse_scenario_file,
    run_scenario,
    sweep_eps,
    sweep_eta,
    sweep_kappa,
    sweep_mobility,
)
from .modem import (
    constellation_points,
    demodulate_block,
    demodulate_frame,
    map_symbols,
    modulate_block,
    modulate_frame,
)
from .variance import (
    CsOrderingReport,
    PairSnr,
    VariancePrediction,
    check_cs_ordering,
    f_lq,
    intercept_penalty,
    pair_snr_table,
    var_a1a2a3,
    var_general,
    var_intercept,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelRealization", "Constellation", "CsOrderingReport", "EstimateReport",
    "ImpairmentParams", "MseRow", "PairSnr", "RegionPlan",
    "ResidualOffsetEstimator", "SIMPLIFIED", "SPEED_OF_LIGHT", "Scenario",
    "SystemConfig", "VariancePrediction", "WEIGHTED", "add_awgn",
    "apply_impairments_freq", "apply_impairments_time", "block_phase_intercept",
    "block_phase_slope", "check_cs_ordering", "constellation_points",
    "demodulate_block", "demodulate_frame", "doppler_hz_for_speed", "emit_csv",
    "estimate", "exponential_power_profile", "extract_phases", "f_lq",
    "fit_offset_pair", "fit_phase_ramp", "flat_channel", "generate_taps",
    "intercept_penalty", "map_symbols", "modulate_block", "modulate_frame",
    "pair_correlation", "pair_snr_table", "pair_weight", "parse_constellation",
    "parse_scenario_file", "perturb_csi", "plan_regions", "run_scenario",
    "stack_region", "sweep_eps", "sweep_eta", "sweep_kappa", "sweep_mobility",
    "tone_phase_ramp", "var_a1a2a3", "var_general", "var_intercept",
]
