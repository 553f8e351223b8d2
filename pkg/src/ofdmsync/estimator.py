"""Residual CFO/SFO estimation from mirrored subcarrier pairs.

Pipeline: partition the tone indices into ``q`` equal regions, multiply
mirrored tone pairs inside each region (their index-dependent phases cancel,
leaving one offset-driven phase per block and region), stack the pair
products coherently, extract and unwrap the per-(block, region) phases, fit
a line over the block index per region, then fit the per-region phase rates
against the region pair sums to separate the clock offset (slope) from the
carrier offset (intercept).

Phase model per block l and region with pair sum S::

    theta(l) = (2*cfo + sfo*S) * (2*pi*l*(1+g) + 2*pi*g + pi*(n-1)/n)

Estimability: sequential unwrapping needs the per-block increment below pi,
i.e. |2*cfo + sfo*S| < 1/(2*(1+g)) for every region.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .config import Constellation, SystemConfig, parse_constellation
from .validation import as_complex_grid

WEIGHTED = "weighted"
SIMPLIFIED = "simplified"
_MODES = (WEIGHTED, SIMPLIFIED)


@dataclass(frozen=True, eq=False)
class RegionPlan:
    """Region partition and the mirrored pair sets feeding the estimator.

    ``regions[i]`` is the tone range of region i, ``pair_sums[i]`` the
    constant k1 + k2 shared by its pairs, ``pairs[i]`` the (k1, k2) tuples
    with k1 from the lower half, k2 from the upper half, neither a null.
    """

    q_count: int
    regions: tuple[range, ...]
    pair_sums: tuple[int, ...]
    pairs: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        k1 = tuple(np.array([p[0] for p in ps], dtype=np.intp) for ps in self.pairs)
        k2 = tuple(np.array([p[1] for p in ps], dtype=np.intp) for ps in self.pairs)
        object.__setattr__(self, "_k1", k1)
        object.__setattr__(self, "_k2", k2)

    def pair_indices(self, region: int) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays (k1, k2) for one region (0-based)."""
        return self._k1[region], self._k2[region]


def plan_regions(cfg: SystemConfig) -> RegionPlan:
    """Build the region partition and pair sets for ``cfg``.

    Region i (0-based) covers ``[i*n/q, (i+1)*n/q)`` and pairs tones
    (k1, k2) with k1 in the lower half, k2 in the upper half and
    k1 + k2 == n*(2i+1)/q; pairs touching a null subcarrier are dropped.

    Raises
    ------
    ValueError
        If any region ends up with an empty pair set (the estimator would
        have no observable for it), or the region size is odd.
    """
    n, q = cfg.n, cfg.q
    size = n // q
    if size % 2 != 0:
        raise ValueError("region size n/q must be even to split into halves")
    regions, sums, pairs = [], [], []
    for i in range(q):
        lo = i * size
        hi = lo + size
        mid = lo + size // 2
        pair_sum = (n + 2 * n * i) // q
        ps = tuple(
            (k1, pair_sum - k1)
            for k1 in range(lo, mid)
            if mid <= pair_sum - k1 < hi
            and k1 not in cfg.nulls
            and (pair_sum - k1) not in cfg.nulls
        )
        if not ps:
            raise ValueError(f"region {i} has an empty pair set")
        regions.append(range(lo, hi))
        sums.append(pair_sum)
        pairs.append(ps)
    return RegionPlan(
        q_count=q, regions=tuple(regions), pair_sums=tuple(sums), pairs=tuple(pairs)
    )


def pair_correlation(r1, r2):
    """Plain product of two received tones (no conjugation).

    The phases add, so for a mirrored pair the tone-index-dependent parts
    cancel and the offset-driven phase survives with twice the carrier term.
    """
    return r1 * r2


def pair_weight(mode: str, x1_pow, h1_pow, x2_pow, h2_pow, noise_var: float):
    """Combining weight for one pair product.

    ``weighted`` returns 1 / (noise_var * (|X1|^2|H1|^2 + |X2|^2|H2|^2
    + noise_var)); ``simplified`` returns 1.  Every argument may be an
    array.  For constant-modulus alphabets pass the (constant) mean symbol
    power for ``x*_pow``; the expression then needs only channel powers and
    the noise variance.
    """
    if mode == SIMPLIFIED:
        return np.ones(np.broadcast(x1_pow, h1_pow, x2_pow, h2_pow).shape)
    if mode != WEIGHTED:
        raise ValueError(f"unknown mode {mode!r}")
    if noise_var is None or not noise_var > 0:
        raise ValueError("weighted mode requires noise_var > 0")
    p1 = np.asarray(x1_pow) * np.asarray(h1_pow)
    p2 = np.asarray(x2_pow) * np.asarray(h2_pow)
    return 1.0 / (noise_var * ((p1 + p2) + noise_var))


def block_phase_slope(cfg: SystemConfig) -> float:
    """Per-block phase advance per unit pair offset: 2*pi*(1+g)."""
    return 2 * np.pi * (1 + cfg.g)


def block_phase_intercept(cfg: SystemConfig) -> float:
    """Block-0 phase per unit pair offset: 2*pi*g + pi*(n-1)/n."""
    return 2 * np.pi * cfg.g + np.pi * (cfg.n - 1) / cfg.n


def _region_sums(
    grid: np.ndarray,
    csi: np.ndarray,
    ref: np.ndarray,
    plan: RegionPlan,
    mode: str,
    noise_var: Optional[float],
    const_modulus: bool,
    weights: Optional[Sequence[np.ndarray]] = None,
) -> np.ndarray:
    """Coherent pair stacks Z for all blocks and regions, shape (m, q).

    Weights are normalized per (block, region) cell by their maximum before
    summing; only the argument of Z is consumed downstream, so this changes
    nothing observable while keeping magnitudes conditioned and making equal
    weights behave exactly like unit weights.
    """
    m = grid.shape[0]
    z = np.empty((m, plan.q_count), complex)
    for qi in range(plan.q_count):
        k1, k2 = plan.pair_indices(qi)
        v = pair_correlation(grid[:, k1], grid[:, k2])
        lam = ref[:, k1] * ref[:, k2] * csi[:, k1] * csi[:, k2]
        if weights is not None:
            gam = np.broadcast_to(np.asarray(weights[qi], float), v.shape)
        elif mode == WEIGHTED:
            x1p = 1.0 if const_modulus else np.abs(ref[:, k1]) ** 2
            x2p = 1.0 if const_modulus else np.abs(ref[:, k2]) ** 2
            gam = pair_weight(
                WEIGHTED, x1p, np.abs(csi[:, k1]) ** 2, x2p, np.abs(csi[:, k2]) ** 2,
                noise_var,
            )
        else:
            gam = None
        if gam is not None:
            gam = gam / gam.max(axis=-1, keepdims=True)
            z[:, qi] = np.sum(v * gam * np.conj(lam), axis=1)
        else:
            z[:, qi] = np.sum(v * np.conj(lam), axis=1)
    return z


def stack_region(
    grid,
    csi,
    ref_symbols,
    plan: RegionPlan,
    mode: str,
    noise_var: Optional[float],
    l: int,
    q: int,
    *,
    const_modulus: bool = True,
    weights=None,
) -> complex:
    """Coherent pair stack for one block ``l`` and region ``q`` (0-based).

    Sums pair_correlation * weight * conj(reference contribution) over the
    region's pair set; pairs whose reference contribution is zero (null or
    undecided tone) drop out of the sum on their own.  ``weights`` overrides
    the built-in weight rule with caller-supplied nonnegative values, one
    per pair (scaling them all by a positive constant cannot change the
    argument of the result).
    """
    grid = np.asarray(grid, dtype=complex)
    csi = np.asarray(csi, dtype=complex)
    ref = np.asarray(ref_symbols, dtype=complex)
    w = None if weights is None else [np.asarray(weights, float)]
    sub_plan = RegionPlan(
        q_count=1,
        regions=(plan.regions[q],),
        pair_sums=(plan.pair_sums[q],),
        pairs=(plan.pairs[q],),
    )
    z = _region_sums(
        grid[l: l + 1], csi[l: l + 1], ref[l: l + 1], sub_plan, mode, noise_var,
        const_modulus, weights=w,
    )
    return complex(z[0, 0])


def extract_phases(z) -> np.ndarray:
    """Principal arguments of the (m, q) stacks, unwrapped down each column.

    Column-wise sequential unwrapping adds integer multiples of 2*pi so that
    successive block-to-block differences lie in (-pi, pi].  Offsets outside
    the estimability range alias silently; there is nothing local to detect.
    """
    z = np.asarray(z)
    return np.unwrap(np.angle(z), axis=0)


class RampFit(NamedTuple):
    """Per-region phase-rate estimates from the over-blocks line fit.

    ``by_slope`` divides the fitted slope by 2*pi*(1+g) (the primary
    estimate); ``by_intercept`` divides the fitted intercept by
    2*pi*g + pi*(n-1)/n (kept for variance comparisons -- it is much
    noisier because a two-parameter fit localizes the intercept poorly).
    """

    by_slope: float
    by_intercept: float


def fit_phase_ramp(theta_col, cfg: SystemConfig) -> RampFit:
    """Ordinary least squares of one region's phases against the block index.

    Fits theta_l = a*l + d over l = 0..m-1 and converts both coefficients
    into phase-rate estimates.  Requires m >= 2.
    """
    theta = np.asarray(theta_col, float)
    m = theta.shape[0]
    if m < 2:
        raise ValueError("need at least two blocks to fit a slope")
    l = np.arange(m)
    slope, intercept = np.polyfit(l, theta, 1)
    return RampFit(
        by_slope=slope / block_phase_slope(cfg),
        by_intercept=intercept / block_phase_intercept(cfg),
    )


class OffsetFit(NamedTuple):
    sfo: float
    cfo: float


def fit_offset_pair(c_values, plan: RegionPlan) -> OffsetFit:
    """Separate clock and carrier offsets from the per-region phase rates.

    Least squares of c against rows (pair_sum, 2): the coefficient on the
    pair sum is the clock offset, the coefficient on the constant 2 is the
    carrier offset.  Requires at least two regions.
    """
    c = np.asarray(c_values, float)
    if plan.q_count < 2 or c.shape[0] < 2:
        raise ValueError("need at least two regions to separate the offsets")
    b = np.column_stack([np.asarray(plan.pair_sums, float), np.full(plan.q_count, 2.0)])
    sol, *_ = np.linalg.lstsq(b, c, rcond=None)
    return OffsetFit(sfo=float(sol[0]), cfo=float(sol[1]))


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """Estimates plus per-stage intermediates for diagnostics.

    ``cfo_hat``/``sfo_hat`` reflect the basis selected by ``used_intercept``;
    both bases' region rates and final estimates are retained.
    """

    cfo_hat: float
    sfo_hat: float
    c_slope: np.ndarray
    c_intercept: np.ndarray
    theta: np.ndarray
    unwrap_shifts: np.ndarray
    mode: str
    used_intercept: bool
    cfo_by_intercept: float
    sfo_by_intercept: float


def estimate(
    grid,
    csi,
    ref_symbols,
    cfg: SystemConfig,
    mode: str = WEIGHTED,
    noise_var: Optional[float] = None,
    use_intercept: bool = False,
    plan: Optional[RegionPlan] = None,
) -> EstimateReport:
    """Run the full pipeline on one (m, n) post-DFT grid.

    Parameters
    ----------
    grid : (m, n) complex array
        Received post-DFT values.
    csi : (m, n) complex array
        Channel transfer function handed to the estimator (true, perturbed,
        or stale -- the caller decides what the receiver would know).
    ref_symbols : (m, n) complex array
        Reference symbols: transmitted values on pilots, externally decided
        values on data tones, zero on nulls.  Zeros simply drop the pair.
    mode : {'weighted', 'simplified'}
    noise_var : float, optional
        Per-tone noise variance; required (positive) in weighted mode.
    use_intercept : bool
        Select the intercept-based per-region rates for the final fit
        instead of the slope-based ones (diagnostic path).
    plan : RegionPlan, optional
        Reuse a precomputed plan; defaults to ``plan_regions(cfg)``.

    Returns
    -------
    EstimateReport
    """
    if mode not in _MODES:
        raise ValueError(f"unknown mode {mode!r}")
    grid = as_complex_grid(grid, cfg.m, cfg.n, "grid")
    csi = as_complex_grid(csi, cfg.m, cfg.n, "csi")
    ref = as_complex_grid(ref_symbols, cfg.m, cfg.n, "ref_symbols")
    if plan is None:
        plan = plan_regions(cfg)
    z = _region_sums(
        grid, csi, ref, plan, mode, noise_var,
        cfg.constellation.is_constant_modulus,
    )
    raw = np.angle(z)
    theta = extract_phases(z)
    shifts = np.rint((theta - raw) / (2 * np.pi)).astype(int)
    fits = [fit_phase_ramp(theta[:, qi], cfg) for qi in range(plan.q_count)]
    c_slope = np.array([f.by_slope for f in fits])
    c_intercept = np.array([f.by_intercept for f in fits])
    by_slope = fit_offset_pair(c_slope, plan)
    by_intercept = fit_offset_pair(c_intercept, plan)
    chosen = by_intercept if use_intercept else by_slope
    return EstimateReport(
        cfo_hat=chosen.cfo,
        sfo_hat=chosen.sfo,
        c_slope=c_slope,
        c_intercept=c_intercept,
        theta=theta,
        unwrap_shifts=shifts,
        mode=mode,
        used_intercept=use_intercept,
        cfo_by_intercept=by_intercept.cfo,
        sfo_by_intercept=by_intercept.sfo,
    )


class ResidualOffsetEstimator(BaseEstimator):
    """Scikit-learn style front end for the pair-correlation estimator.

    Configuration lives in the constructor; the data-dependent work happens
    in :meth:`fit`, which consumes one post-DFT grid and stores the
    estimates as trailing-underscore attributes.  ``get_params`` /
    ``set_params`` come from :class:`sklearn.base.BaseEstimator`, so the
    object clones and grid-searches like any other estimator.

    Parameters
    ----------
    n, n_g : int
        Subcarrier count and guard length.
    regions : int
        Number of subcarrier regions (even, divides n).
    constellation : str
        Alphabet spec such as ``'psk16'``; only constant-modulus vs. not
        matters to the weighting rule.
    nulls : tuple of int
        Null subcarrier indices excluded from pairing.
    mode : {'weighted', 'simplified'}
    noise_var : float, optional
        Per-tone noise variance (required for weighted mode).
    use_intercept : bool
        Use the intercept-based region rates (diagnostic variant).

    Attributes
    ----------
    cfo_hat_, sfo_hat_ : float
        Estimated offsets after :meth:`fit`.
    report_ : EstimateReport
        Full per-stage diagnostics.

    Examples
    --------
    >>> est = ResidualOffsetEstimator(n=512, n_g=64, regions=4, mode="weighted",
    ...                               noise_var=0.01)
    >>> est.fit(grid, csi=ctf, ref_symbols=sent)      # doctest: +SKIP
    >>> est.cfo_hat_, est.sfo_hat_                    # doctest: +SKIP
    """

    def __init__(
        self,
        n: int = 512,
        n_g: int = 64,
        regions: int = 4,
        constellation: str = "psk16",
        nulls: tuple = (),
        mode: str = WEIGHTED,
        noise_var: Optional[float] = None,
        use_intercept: bool = False,
    ):
        self.n = n
        self.n_g = n_g
        self.regions = regions
        self.constellation = constellation
        self.nulls = nulls
        self.mode = mode
        self.noise_var = noise_var
        self.use_intercept = use_intercept

    def _config(self, m: int) -> SystemConfig:
        const = (
            self.constellation
            if isinstance(self.constellation, Constellation)
            else parse_constellation(self.constellation)
        )
        return SystemConfig(
            n=self.n, n_g=self.n_g, m=m, q=self.regions,
            constellation=const, nulls=frozenset(self.nulls),
        )

    def fit(self, X, y=None, *, csi=None, ref_symbols=None):
        """Estimate the offsets from one grid.

        Parameters
        ----------
        X : (m, n) complex array
            Post-DFT received grid; the block count is taken from the data.
        y : ignored
            Present for scikit-learn API compatibility.
        csi : (m, n) complex array, required
        ref_symbols : (m, n) complex array, required
        """
        X = np.asarray(X)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D (blocks, subcarriers) grid")
        if csi is None or ref_symbols is None:
            raise ValueError("fit requires csi= and ref_symbols= arrays")
        cfg = self._config(m=X.shape[0])
        report = estimate(
            X, csi, ref_symbols, cfg,
            mode=self.mode, noise_var=self.noise_var,
            use_intercept=self.use_intercept,
        )
        self.report_ = report
        self.cfo_hat_ = report.cfo_hat
        self.sfo_hat_ = report.sfo_hat
        self.n_blocks_ = X.shape[0]
        return self
