"""Seeded Monte-Carlo scenarios, MSE aggregation and CSV emission.

Determinism contract: every trial draws from generators seeded by
``(scenario seed, sweep-point index, trial index)``, so runs are
reproducible byte-for-byte and trials are independent of execution order.
Accumulation happens in trial order with plain Python floats.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .channel import (
    ChannelRealization,
    add_awgn,
    apply_impairments_freq,
    apply_impairments_time,
    exponential_power_profile,
    flat_channel,
    generate_taps,
    perturb_csi,
)
from .config import ImpairmentParams, SystemConfig, parse_constellation
from .estimator import RegionPlan, estimate, plan_regions
from .harness_io import MseRow, emit_csv, parse_scenario_file  # noqa: F401  (re-export)
from .modem import demodulate_frame, map_symbols, modulate_frame
from .variance import pair_snr_table, var_a1a2a3, var_general

SPEED_OF_LIGHT = 2.998e8

# cap on per-trial analytic predictions averaged into the var_*_pred columns
_PREDICTION_TRIALS = 256

_CHANNELS = ("flat", "multipath")
_CSI_KINDS = ("genie", "perturbed", "stale")
_MODELS = ("freq", "time")


def doppler_hz_for_speed(speed_kmh: float, f_c: float) -> float:
    """Maximum Doppler shift v*f_c/c for a terminal speed in km/h."""
    return speed_kmh / 3.6 * f_c / SPEED_OF_LIGHT


@dataclass(frozen=True)
class Scenario:
    """One Monte-Carlo experiment definition (flat fields, file-mappable).

    ``snr_db`` lists the sweep points for :func:`run_scenario`; the
    parameter sweeps (:func:`sweep_eta` etc.) hold SNR fixed at the first
    entry instead.  ``model`` selects the grid synthesis path: ``freq`` is
    the fast ICI-free model, ``time`` the sample-level model with real ICI.
    """

    n: int = 512
    n_g: int = 64
    m: int = 10
    q: int = 4
    t_s: float = 100e-9
    f_c: float = 5e9
    constellation: str = "psk16"
    cfo: float = 0.02
    sfo: float = 5e-5
    snr_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 2000
    channel: str = "multipath"
    l_taps: int = 32
    speed_kmh: float = 0.0
    csi: str = "genie"
    kappa: float = 0.0
    mode: str = "weighted"
    model: str = "freq"
    seed: int = 1234

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snr_db:
            raise ValueError("snr_db must be nonempty")
        if tuple(sorted(self.snr_db)) != tuple(self.snr_db):
            raise ValueError("snr_db must be sorted ascending")
        if self.channel not in _CHANNELS:
            raise ValueError(f"channel must be one of {_CHANNELS}")
        if self.csi not in _CSI_KINDS:
            raise ValueError(f"csi must be one of {_CSI_KINDS}")
        if self.model not in _MODELS:
            raise ValueError(f"model must be one of {_MODELS}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        cfg = self.config()
        imp = ImpairmentParams(cfo=self.cfo, sfo=self.sfo)
        if not imp.is_estimable(cfg):
            raise ValueError(
                "cfo/sfo outside the unambiguous range "
                f"(max pair rotation {imp.max_pair_rotation(cfg):.4f} "
                f">= {1 / (2 * (1 + cfg.g)):.4f})"
            )

    def config(self) -> SystemConfig:
        return SystemConfig(
            n=self.n, n_g=self.n_g, m=self.m, q=self.q, t_s=self.t_s,
            f_c=self.f_c, constellation=parse_constellation(self.constellation),
        )

    def mean_tone_gain(self) -> float:
        """Ensemble per-tone CTF power under the scenario's channel."""
        if self.channel == "flat":
            return 1.0
        return float(exponential_power_profile(self.l_taps).sum())


def _run_trial(
    scenario: Scenario,
    cfg: SystemConfig,
    plan: RegionPlan,
    cfo: float,
    sfo: float,
    noise_var: float,
    point_index: int,
    trial_index: int,
    collect_prediction: bool,
):
    """One seeded trial; returns (cfo_err, sfo_err, prediction-or-None)."""
    streams = np.random.SeedSequence(
        (scenario.seed, point_index, trial_index)
    ).spawn(4)
    sym_rng = np.random.default_rng(streams[0])

    order = cfg.constellation.order
    indices = sym_rng.integers(0, order, size=(cfg.m, cfg.n))
    sent = map_symbols(indices, cfg.constellation)
    if cfg.nulls:
        sent[:, sorted(cfg.nulls)] = 0.0

    if scenario.channel == "flat":
        chan = flat_channel(cfg)
    else:
        chan = generate_taps(
            cfg, scenario.l_taps,
            doppler_hz=doppler_hz_for_speed(scenario.speed_kmh, cfg.f_c),
            seed=streams[1],
        )

    imp = ImpairmentParams(cfo=cfo, sfo=sfo, noise_var=noise_var, seed=streams[2])
    if scenario.model == "freq":
        grid = apply_impairments_freq(sent, chan, imp, cfg)
    else:
        frame = modulate_frame(sent, cfg)
        frame = apply_impairments_time(frame, chan, imp, cfg)
        frame = add_awgn(frame, noise_var, seed=streams[2])
        grid = demodulate_frame(frame, cfg)

    if scenario.csi == "genie":
        csi = chan.ctf
    elif scenario.csi == "perturbed":
        csi = perturb_csi(chan, scenario.kappa, seed=streams[3]).ctf
    else:  # stale: receiver keeps the first block's response for the frame
        csi = np.tile(chan.ctf[0], (cfg.m, 1))

    report = estimate(
        grid, csi, sent, cfg, mode=scenario.mode, noise_var=noise_var, plan=plan
    )

    prediction = None
    if collect_prediction:
        ref_power = (
            1.0 if cfg.constellation.is_constant_modulus else np.abs(sent) ** 2
        )
        tables = pair_snr_table(chan.ctf, ref_power, noise_var, plan)
        prediction = var_general(tables, cfg, scenario.mode)
    return report.cfo_hat - cfo, report.sfo_hat - sfo, prediction


def _run_point(
    scenario: Scenario,
    cfg: SystemConfig,
    plan: RegionPlan,
    cfo: float,
    sfo: float,
    snr_db: float,
    point_index: int,
    key_name: Optional[str] = None,
    key: Optional[float] = None,
) -> MseRow:
    """Monte-Carlo loop for one sweep point."""
    snr_lin = 10.0 ** (snr_db / 10.0)
    noise_var = scenario.mean_tone_gain() / snr_lin

    flat_cm = scenario.channel == "flat" and cfg.constellation.is_constant_modulus
    se_cfo = se_sfo = b_cfo = b_sfo = 0.0
    pred_eta_sum = pred_eps_sum = 0.0
    pred_count = 0
    failures = 0
    done = 0
    for t in range(scenario.trials):
        want_pred = (not flat_cm) and pred_count < _PREDICTION_TRIALS
        try:
            cfo_err, sfo_err, pred = _run_trial(
                scenario, cfg, plan, cfo, sfo, noise_var, point_index, t, want_pred
            )
        except ValueError:
            failures += 1
            continue
        se_cfo += cfo_err * cfo_err
        se_sfo += sfo_err * sfo_err
        b_cfo += cfo_err
        b_sfo += sfo_err
        done += 1
        if pred is not None:
            pred_eta_sum += pred.var_eta
            pred_eps_sum += pred.var_eps
            pred_count += 1
    if done == 0:
        raise RuntimeError(f"every trial failed at point index {point_index}")

    if flat_cm:
        pred = var_a1a2a3(cfg, snr_lin)
        var_eta_pred, var_eps_pred = pred.var_eta, pred.var_eps
    else:
        var_eta_pred = pred_eta_sum / pred_count
        var_eps_pred = pred_eps_sum / pred_count
    return MseRow(
        snr_db=snr_db,
        mse_eta=se_sfo / done,
        mse_eps=se_cfo / done,
        bias_eta=b_sfo / done,
        bias_eps=b_cfo / done,
        var_eta_pred=var_eta_pred,
        var_eps_pred=var_eps_pred,
        trials=done,
        mode=scenario.mode,
        key_name=key_name,
        key=key,
        failures=failures,
    )


def run_scenario(scenario: Scenario) -> list[MseRow]:
    """Run the scenario over its SNR list; one MseRow per SNR point.

    Per-trial estimator rejections are counted on the row (``failures``)
    and excluded from the averages, never silently dropped.  The analytic
    ``var_*_pred`` columns carry the flat-channel closed forms when they
    apply, otherwise the general prediction averaged over the first trials'
    channels with genie knowledge (a known-CSI bound even for perturbed or
    stale CSI scenarios).
    """
    cfg = scenario.config()
    plan = plan_regions(cfg)
    return [
        _run_point(scenario, cfg, plan, scenario.cfo, scenario.sfo, snr_db, i)
        for i, snr_db in enumerate(scenario.snr_db)
    ]


def _fixed_snr(scenario: Scenario) -> float:
    return scenario.snr_db[0]


def sweep_eta(scenario: Scenario, eta_values: Sequence[float]) -> list[MseRow]:
    """Sweep the clock offset at fixed SNR (first snr_db entry); carrier
    offset stays at the scenario value.  Rows are keyed by ``eta``."""
    cfg = scenario.config()
    plan = plan_regions(cfg)
    snr_db = _fixed_snr(scenario)
    return [
        _run_point(scenario, cfg, plan, scenario.cfo, eta, snr_db, i, "eta", eta)
        for i, eta in enumerate(eta_values)
    ]


def sweep_eps(scenario: Scenario, eps_values: Sequence[float]) -> list[MseRow]:
    """Sweep the carrier offset at fixed SNR; rows keyed by ``eps``."""
    cfg = scenario.config()
    plan = plan_regions(cfg)
    snr_db = _fixed_snr(scenario)
    return [
        _run_point(scenario, cfg, plan, eps, scenario.sfo, snr_db, i, "eps", eps)
        for i, eps in enumerate(eps_values)
    ]


def sweep_kappa(scenario: Scenario, kappa_values: Sequence[float]) -> list[MseRow]:
    """Sweep the channel-knowledge accuracy; rows keyed by ``kappa``.

    kappa = 0 reproduces a genie run point-for-point under the same seed.
    """
    cfg = scenario.config()
    plan = plan_regions(cfg)
    snr_db = _fixed_snr(scenario)
    rows = []
    for i, kappa in enumerate(kappa_values):
        s = dataclasses.replace(scenario, csi="perturbed", kappa=kappa)
        rows.append(
            _run_point(s, cfg, plan, s.cfo, s.sfo, snr_db, i, "kappa", kappa)
        )
    return rows


def sweep_mobility(scenario: Scenario, speeds_kmh: Sequence[float]) -> list[MseRow]:
    """Sweep terminal speed with stale channel knowledge (the receiver uses
    the first block's response for the whole frame); rows keyed by
    ``speed_kmh``.  speed 0 reduces to the static rows."""
    cfg = scenario.config()
    plan = plan_regions(cfg)
    snr_db = _fixed_snr(scenario)
    rows = []
    for i, speed in enumerate(speeds_kmh):
        s = dataclasses.replace(scenario, csi="stale", speed_kmh=speed)
        rows.append(
            _run_point(s, cfg, plan, s.cfo, s.sfo, snr_db, i, "speed_kmh", speed)
        )
    return rows
