"""Rayleigh multipath realizations and CFO/SFO/AWGN application.

Two fidelity levels synthesize the post-DFT grid:

* :func:`apply_impairments_freq` writes the per-tone model directly -- phase
  ramp only, unit amplitude factor, no inter-carrier interference.  Fast
  path for Monte-Carlo runs.
* :func:`apply_impairments_time` operates on the sample stream.  Each block
  of the transmit frame is an exact finite tone sum at frequencies
  k/(n*t_s), k = 0..n-1, so the receiver's stretched sampling instants
  t = p*t_s*(1+sfo) can be evaluated exactly (Bluestein chirp transform)
  instead of interpolated.  This path produces the real ICI and amplitude
  loss that the fast path omits.  Generic bandlimited interpolation is
  deliberately avoided: it would fold tones with k >= n/2 onto negative
  frequencies and change the sign of their clock-offset phase slope.

Noise placement: the frequency-domain path adds per-tone noise itself (from
``imp.noise_var`` and ``imp.seed``); the time-domain path never adds noise,
callers apply :func:`add_awgn` to the output samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import czt
from scipy.special import j0

from .config import ImpairmentParams, SystemConfig
from .validation import as_complex_grid, as_complex_vector


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Per-block tap gains and the derived per-tone transfer function.

    ``taps`` has shape (m, l_taps); ``ctf`` is its zero-padded, unnormalized
    n-point DFT per block, shape (m, n).
    """

    taps: np.ndarray
    ctf: np.ndarray
    l_taps: int

    def consistent(self, rtol: float = 1e-12) -> bool:
        """Check that ctf rows are the DFT of the tap rows."""
        ref = np.fft.fft(self.taps, n=self.ctf.shape[1], axis=1)
        scale = np.max(np.abs(ref)) or 1.0
        return bool(np.max(np.abs(ref - self.ctf)) <= rtol * scale)


def exponential_power_profile(l_taps: int) -> np.ndarray:
    """Per-tap mean powers exp(-i/L) / sum_i exp(-2i/L), i = 0..L-1.

    Note the denominator squares the magnitudes, so the total power is
    sum(exp(-i/L)) / sum(exp(-2i/L)) -- about 1.44 for L = 32, not 1.
    """
    if l_taps < 1:
        raise ValueError("l_taps must be >= 1")
    i = np.arange(l_taps)
    return np.exp(-i / l_taps) / np.sum(np.exp(-2 * i / l_taps))


def _complex_gaussian(rng: np.random.Generator, shape, var) -> np.ndarray:
    """Zero-mean circular complex Gaussian with total variance ``var``."""
    scale = np.sqrt(np.asarray(var) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def generate_taps(
    cfg: SystemConfig,
    l_taps: int,
    doppler_hz: float = 0.0,
    seed=None,
) -> ChannelRealization:
    """Draw one Rayleigh multipath realization for a whole frame.

    Taps are independent zero-mean circular complex Gaussians with the
    exponential power profile; tap delays are sample-spaced.  With
    ``doppler_hz > 0`` each tap evolves from block to block as a first-order
    Gauss-innovations process whose lag-1 correlation equals the Jakes value
    J0(2*pi*doppler_hz*dt) at the block duration dt = n_b*t_s; with
    ``doppler_hz == 0`` the taps are frozen for all m blocks.

    Raises
    ------
    ValueError
        If ``l_taps`` exceeds the guard length (the delay spread must stay
        inside the cyclic prefix for the per-tone grid model to hold).
    """
    if l_taps > cfg.n_g:
        raise ValueError(f"l_taps={l_taps} exceeds guard length n_g={cfg.n_g}")
    profile = exponential_power_profile(l_taps)
    rng = np.random.default_rng(seed)
    first = _complex_gaussian(rng, l_taps, profile)
    if doppler_hz > 0.0:
        rho = float(j0(2 * np.pi * doppler_hz * cfg.block_duration))
        taps = np.empty((cfg.m, l_taps), complex)
        taps[0] = first
        innov_var = profile * (1.0 - rho * rho)
        for l in range(1, cfg.m):
            taps[l] = rho * taps[l - 1] + _complex_gaussian(rng, l_taps, innov_var)
    else:
        taps = np.tile(first, (cfg.m, 1))
    ctf = np.fft.fft(taps, n=cfg.n, axis=1)
    return ChannelRealization(taps=taps, ctf=ctf, l_taps=l_taps)


def flat_channel(cfg: SystemConfig) -> ChannelRealization:
    """Unit single-tap channel: ctf identically one."""
    return ChannelRealization(
        taps=np.ones((cfg.m, 1), complex),
        ctf=np.ones((cfg.m, cfg.n), complex),
        l_taps=1,
    )


def add_awgn(samples, noise_var: float, seed=None) -> np.ndarray:
    """Add i.i.d. circular complex Gaussian noise of total variance ``noise_var``.

    Real and imaginary parts are independent with variance ``noise_var/2``
    each.  Deterministic for a fixed seed; ``noise_var == 0`` returns the
    input values unchanged.
    """
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    arr = np.asarray(samples, dtype=complex)
    if noise_var == 0:
        return arr.copy()
    rng = np.random.default_rng(seed)
    return arr + _complex_gaussian(rng, arr.shape, noise_var)


def perturb_csi(chan: ChannelRealization, kappa: float, seed=None) -> ChannelRealization:
    """Blend the true transfer function with independent unit-variance noise.

    Returns a realization whose ctf is sqrt(1-kappa^2)*ctf + kappa*J with
    J ~ CN(0, 1) per tone; kappa = 0 reproduces the input exactly, kappa = 1
    is pure noise.  Models an imperfect channel estimator of accuracy kappa.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    j_noise = _complex_gaussian(rng, chan.ctf.shape, 1.0)
    ctf = np.sqrt(1.0 - kappa * kappa) * chan.ctf + kappa * j_noise
    # keep the taps/ctf DFT relation; the perturbation has full delay support
    taps = np.fft.ifft(ctf, axis=1)
    return ChannelRealization(taps=taps, ctf=ctf, l_taps=ctf.shape[1])


def tone_phase_ramp(cfg: SystemConfig, imp: ImpairmentParams) -> np.ndarray:
    """Deterministic per-tone phase of the grid model, shape (m, n).

    Tone k in block l is rotated by
    ``theta_k * (pi*(n-1)/n + 2*pi*(l*n_b + n_g)/n)`` with
    ``theta_k = cfo + sfo*k``: a half-block phase plus a ramp over the block
    index whose slope grows linearly in the tone index.
    """
    k = np.arange(cfg.n)
    theta = imp.cfo + imp.sfo * k
    l = np.arange(cfg.m)[:, None]
    return theta * (np.pi * (cfg.n - 1) / cfg.n + 2 * np.pi * (l * cfg.n_b + cfg.n_g) / cfg.n)


def apply_impairments_freq(
    grid_x,
    chan: ChannelRealization,
    imp: ImpairmentParams,
    cfg: SystemConfig,
) -> np.ndarray:
    """Fast grid synthesis: R = X * H * exp(j*phase) + noise.

    The amplitude factor of the tone-offset kernel is taken as exactly one
    and no ICI is generated; per-tone complex noise of variance
    ``imp.noise_var`` is added (seeded by ``imp.seed``).
    """
    x = as_complex_grid(grid_x, cfg.m, cfg.n, "tone grid")
    h = as_complex_grid(chan.ctf, cfg.m, cfg.n, "ctf")
    r = x * h * np.exp(1j * tone_phase_ramp(cfg, imp))
    if imp.noise_var > 0:
        rng = np.random.default_rng(imp.seed)
        r = r + _complex_gaussian(rng, r.shape, imp.noise_var)
    return r


def _convolve_blockwise(frame: np.ndarray, taps: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Linear convolution with per-block tap vectors (zero initial state)."""
    m, l_taps = taps.shape
    out = np.empty_like(frame)
    padded = np.concatenate([np.zeros(l_taps - 1, complex), frame])
    for l in range(m):
        lo, hi = l * cfg.n_b, (l + 1) * cfg.n_b
        seg = padded[lo: hi + l_taps - 1]
        out[lo:hi] = np.convolve(seg, taps[l])[l_taps - 1: l_taps - 1 + cfg.n_b]
    return out


def apply_impairments_time(
    frame,
    chan: ChannelRealization,
    imp: ImpairmentParams,
    cfg: SystemConfig,
) -> np.ndarray:
    """Sample-level channel, clock skew and carrier offset; no noise.

    Output sample p is the channel-filtered transmit waveform evaluated at
    t = p*t_s*(1+sfo), mixed with exp(2j*pi*df*t) where df = cfo/(n*t_s).

    With ``sfo == 0`` this reduces to per-block linear convolution with the
    tap vectors (bit-exact identity for a unit single tap and zero cfo).
    With ``sfo != 0`` each block is re-evaluated from its tone coefficients
    at the skewed instants via a chirp transform, which is exact for every
    post-guard sample as long as the delay spread fits inside the guard and
    the accumulated skew stays below one sample per block; the guard samples
    themselves are synthesized from the same single-block tone sum (their
    cross-block ISI is not modeled -- they are discarded at demodulation).
    """
    f = as_complex_vector(frame, cfg.m * cfg.n_b, "frame")
    n, n_g, n_b = cfg.n, cfg.n_g, cfg.n_b
    p = np.arange(cfg.m * n_b)

    if imp.sfo == 0.0:
        out = _convolve_blockwise(f, chan.taps, cfg)
    else:
        out = np.empty_like(f)
        step = np.exp(2j * np.pi * (1.0 + imp.sfo) / n)
        root_n = np.sqrt(n)
        for l in range(cfg.m):
            body = f[l * n_b + n_g: (l + 1) * n_b]
            tones = np.fft.fft(body, norm="ortho") * chan.ctf[l]
            # sample offsets u_j = (j - n_g) + sfo*(l*n_b + j) relative to the
            # block's data body; j = 0 starts at the guard
            u0 = -n_g + imp.sfo * l * n_b
            out[l * n_b: (l + 1) * n_b] = (
                czt(tones, m=n_b, w=step, a=np.exp(-2j * np.pi * u0 / n)) / root_n
            )
    if imp.cfo != 0.0:
        out = out * np.exp(2j * np.pi * imp.cfo * p * (1.0 + imp.sfo) / n)
    return out
