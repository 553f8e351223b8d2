"""Closed-form variance predictors for the two-stage offset estimator.

All evaluators are pure functions of per-pair SNR-like ratios::

    phi_cross = |X1|^2 |H1|^2 |X2|^2 |H2|^2 / noise_var^2
    phi_plus  = (|X1|^2 |H1|^2 + |X2|^2 |H2|^2) / noise_var

The per-cell figure of merit F (one value per block and region) enters the
final variances through the inverse-F weighting of the over-blocks line
fit.  The weighted combining rule always yields F at least as large as the
unit-weight rule (Cauchy-Schwarz), with equality exactly when phi_plus is
constant across the pair set.

The flat-channel constant-modulus closed forms (:func:`var_a1a2a3`) assume
full pair sets of size n/(2q) and drop the additive '+1' next to phi_plus,
i.e. they are the high-SNR limit of the general forms: general/special =
(2*SNR + 1)/(2*SNR) under those inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .config import SystemConfig
from .estimator import SIMPLIFIED, WEIGHTED, RegionPlan

_GAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PairSnr:
    """Per-pair SNR ratios with pairs on the last axis."""

    phi_cross: np.ndarray
    phi_plus: np.ndarray

    def __post_init__(self) -> None:
        pc = np.asarray(self.phi_cross, float)
        pp = np.asarray(self.phi_plus, float)
        if pc.shape != pp.shape:
            raise ValueError("phi_cross and phi_plus must have the same shape")
        if pc.size == 0:
            raise ValueError("pair set must be nonempty")
        if np.any(pc < 0) or np.any(pp < 0):
            raise ValueError("phi ratios must be nonnegative")
        object.__setattr__(self, "phi_cross", pc)
        object.__setattr__(self, "phi_plus", pp)


def pair_snr_table(
    ctf,
    ref_power,
    noise_var: float,
    plan: RegionPlan,
) -> list[PairSnr]:
    """Build the per-region phi tables from a CTF and symbol powers.

    ``ref_power`` is either a scalar (constant-modulus mean power) or an
    (m, n) array of per-tone symbol powers.  Returns one PairSnr of shape
    (m, pairs) per region.
    """
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    h_pow = np.abs(np.asarray(ctf, complex)) ** 2
    xp = np.asarray(ref_power, float)
    tables = []
    for qi in range(plan.q_count):
        k1, k2 = plan.pair_indices(qi)
        if xp.ndim == 0:
            p1 = xp * h_pow[:, k1]
            p2 = xp * h_pow[:, k2]
        else:
            p1 = xp[:, k1] * h_pow[:, k1]
            p2 = xp[:, k2] * h_pow[:, k2]
        tables.append(
            PairSnr(phi_cross=p1 * p2 / noise_var**2, phi_plus=(p1 + p2) / noise_var)
        )
    return tables


def f_lq(snr: PairSnr, mode: str) -> np.ndarray:
    """Figure of merit for one pair collection, reduced over the last axis.

    Weighted: sum of phi_cross/(phi_plus + 1).  Simplified:
    (sum phi_cross)^2 / sum(phi_cross * (phi_plus + 1)).
    """
    pc, pp = snr.phi_cross, snr.phi_plus
    if mode == WEIGHTED:
        return np.sum(pc / (pp + 1.0), axis=-1)
    if mode == SIMPLIFIED:
        num = np.sum(pc, axis=-1) ** 2
        den = np.sum(pc * (pp + 1.0), axis=-1)
        # den vanishes only when every phi_cross is zero; no signal, no merit
        safe = np.where(den > 0, den, 1.0)
        return np.where(den > 0, num / safe, 0.0)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class VariancePrediction:
    """Predicted estimator variances.  ``basis`` marks which per-region rate
    (slope- or intercept-derived) the prediction refers to."""

    var_eta: float
    var_eps: float
    mode: str
    assumptions: str  # 'general' or 'a1a2a3'
    basis: str = "slope"

    def __post_init__(self) -> None:
        if self.var_eta < 0 or self.var_eps < 0:
            raise ValueError("variances must be nonnegative")


def _region_weights(cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Quadratic region weights entering the final-stage variance."""
    q = np.arange(1, cfg.q + 1, dtype=float)
    u = 16.0 * cfg.n**2 * (2 * q - cfg.q - 1) ** 2
    y = 4.0 * cfg.n**4 * (2 * q - 1 - (4 * cfg.q**2 - 1) / (3 * cfg.q)) ** 2
    return u, y


def var_general(
    tables: Union[PairSnr, Sequence[PairSnr]],
    cfg: SystemConfig,
    mode: str,
) -> VariancePrediction:
    """General variance prediction from a full (block, region) phi table.

    ``tables`` is one PairSnr per region with shape (m, pairs) each (a
    single PairSnr of shape (m, q, pairs) is also accepted when all regions
    share the pair count).
    """
    if cfg.m < 2 or cfg.q < 2:
        raise ValueError("need m >= 2 and q >= 2")
    if isinstance(tables, PairSnr):
        f = f_lq(tables, mode)  # (m, q)
    else:
        f = np.stack([f_lq(t, mode) for t in tables], axis=1)
    if f.shape != (cfg.m, cfg.q):
        raise ValueError(f"phi table reduces to shape {f.shape}, expected {(cfg.m, cfg.q)}")
    m, n, qq, g = cfg.m, cfg.n, cfg.q, cfg.g
    l = np.arange(m)
    s = np.sum((2 * l[:, None] - m + 1) ** 2 / f, axis=0)  # per region
    u, y = _region_weights(cfg)
    den = (
        32.0 * n**4 * (qq**2 - 1) ** 2 * np.pi**2 * (1 + g) ** 2
        * m**2 * (m**2 - 1) ** 2
    )
    return VariancePrediction(
        var_eta=float(81.0 * np.sum(u * s) / den),
        var_eps=float(81.0 * np.sum(y * s) / den),
        mode=mode,
        assumptions="general",
    )


def var_a1a2a3(cfg: SystemConfig, snr: float) -> VariancePrediction:
    """Closed forms for flat fading, constant modulus, full equal pair sets.

    ``snr`` is the linear ratio mean_symbol_power * mean_tone_gain /
    noise_var.  Both combining rules coincide under these assumptions, so
    the prediction applies to either mode.
    """
    if not snr > 0:
        raise ValueError("snr must be positive")
    if cfg.m < 2 or cfg.q < 2:
        raise ValueError("need m >= 2 and q >= 2")
    m, n, q, g = cfg.m, cfg.n, cfg.q, cfg.g
    common = np.pi**2 * (1 + g) ** 2 * m * (m + 1) * (m - 1) * (q**2 - 1) * snr
    return VariancePrediction(
        var_eta=float(18.0 * q**2 / (common * n**3)),
        var_eps=float(6.0 * (4 * q**2 - 1) / (4.0 * common * n)),
        mode="both",
        assumptions="a1a2a3",
    )


def intercept_penalty(m: int, g: float) -> float:
    """Variance ratio of intercept-based to slope-based region rates,
    (8m - 4)(m - 1)(1 + g)^2 / (1 + 2g)^2."""
    return (8 * m - 4) * (m - 1) * (1 + g) ** 2 / (1 + 2 * g) ** 2


def var_intercept(cfg: SystemConfig, base: VariancePrediction) -> VariancePrediction:
    """Rescale a slope-basis prediction to the intercept-based variant."""
    factor = intercept_penalty(cfg.m, cfg.g)
    return VariancePrediction(
        var_eta=base.var_eta * factor,
        var_eps=base.var_eps * factor,
        mode=base.mode,
        assumptions=base.assumptions,
        basis="intercept",
    )


@dataclass(frozen=True)
class CsOrderingReport:
    f_weighted: float
    f_simplified: float
    gap: float
    phi_plus_constant: bool


def check_cs_ordering(snr: PairSnr) -> CsOrderingReport:
    """Evaluate both figure-of-merit branches on one 1-D pair collection.

    The weighted branch dominates the simplified one for any nonnegative
    inputs; a gap below -1e-12 (relative) would contradict the
    Cauchy-Schwarz argument and raises.  Equality holds exactly when
    phi_plus is constant across the pairs -- including contrived power
    profiles where |X|^2 is proportional to 1/|H|^2.
    """
    pc = np.atleast_1d(snr.phi_cross)
    pp = np.atleast_1d(snr.phi_plus)
    if pc.ndim != 1:
        raise ValueError("check_cs_ordering expects a single pair collection")
    one = PairSnr(pc, pp)
    fw = float(f_lq(one, WEIGHTED))
    fs = float(f_lq(one, SIMPLIFIED))
    gap = fw - fs
    scale = max(abs(fw), 1.0)
    if gap < -_GAP_TOL * scale:
        raise AssertionError(
            f"weighted branch fell below simplified by {gap!r}; ordering violated"
        )
    spread = float(pp.max() - pp.min())
    constant = spread <= _GAP_TOL * max(float(pp.max()), 1.0)
    return CsOrderingReport(
        f_weighted=fw, f_simplified=fs, gap=gap, phi_plus_constant=constant
    )
