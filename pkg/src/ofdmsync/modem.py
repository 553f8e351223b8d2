"""Constellation mapping, unitary (I)DFT modulation and cyclic-prefix framing.

A frame is ``m`` consecutive blocks of ``n_b = n + n_g`` samples; each block
is the length-``n`` unitary IDFT of its tone vector with the last ``n_g``
samples copied in front as the cyclic prefix.
"""

from __future__ import annotations

import numpy as np

from .config import Constellation, SystemConfig
from .validation import as_complex_grid, as_complex_vector, check_null_tones


def constellation_points(constellation: Constellation) -> np.ndarray:
    """Return the full alphabet, unit average power, natural index order."""
    order = constellation.order
    if constellation.kind == "psk":
        return np.exp(2j * np.pi * np.arange(order) / order)
    # square QAM, row-major over the amplitude grid
    side = round(order ** 0.5)
    levels = 2 * np.arange(side) - (side - 1)
    grid = levels[:, None] + 1j * levels[None, :]
    pts = grid.ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def map_symbols(indices, constellation: Constellation) -> np.ndarray:
    """Map integer symbol indices onto constellation points.

    Parameters
    ----------
    indices : array_like of int
        Any shape; every entry must lie in ``[0, order)``.
    constellation : Constellation

    Returns
    -------
    ndarray of complex, same shape as ``indices``.
    """
    idx = np.asarray(indices)
    if idx.size and (idx.min() < 0 or idx.max() >= constellation.order):
        raise ValueError(
            f"symbol index out of range for order-{constellation.order} constellation"
        )
    return constellation_points(constellation)[idx]


def modulate_block(values, cfg: SystemConfig) -> np.ndarray:
    """Unitary IDFT of one tone vector plus cyclic prefix.

    ``values`` is the length-``n`` tone vector; the output has length
    ``n_b`` with ``out[:n_g] == out[n:]``.
    """
    v = as_complex_vector(values, cfg.n, "tone vector")
    check_null_tones(v, cfg, "tone vector")
    body = np.fft.ifft(v, norm="ortho")
    return np.concatenate([body[cfg.n - cfg.n_g:], body])


def demodulate_block(samples, cfg: SystemConfig) -> np.ndarray:
    """Drop the guard samples and apply the unitary forward DFT."""
    s = as_complex_vector(samples, cfg.n_b, "block samples")
    return np.fft.fft(s[cfg.n_g:], norm="ortho")


def modulate_frame(grid, cfg: SystemConfig) -> np.ndarray:
    """Assemble an (m, n) tone grid into one frame of m*n_b samples."""
    x = as_complex_grid(grid, cfg.m, cfg.n, "tone grid")
    check_null_tones(x, cfg, "tone grid")
    body = np.fft.ifft(x, axis=1, norm="ortho")
    blocks = np.concatenate([body[:, cfg.n - cfg.n_g:], body], axis=1)
    return blocks.reshape(-1)


def demodulate_frame(frame, cfg: SystemConfig) -> np.ndarray:
    """Split a frame into blocks and demodulate each; returns (m, n)."""
    f = as_complex_vector(frame, cfg.m * cfg.n_b, "frame")
    blocks = f.reshape(cfg.m, cfg.n_b)
    return np.fft.fft(blocks[:, cfg.n_g:], axis=1, norm="ortho")
