"""Small input-validation helpers shared by the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .config import SystemConfig


def as_complex_grid(x, m: int, n: int, name: str = "grid") -> np.ndarray:
    """Coerce to a finite complex (m, n) ndarray or raise ValueError."""
    a = np.asarray(x)
    if a.ndim != 2 or a.shape != (m, n):
        raise ValueError(f"{name} must have shape ({m}, {n}), got {a.shape}")
    a = a.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{name} contains non-finite values")
    return a


def as_complex_vector(x, length: int, name: str = "samples") -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1 or a.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got shape {a.shape}")
    return a.astype(np.complex128, copy=False)


def check_null_tones(values: np.ndarray, cfg: SystemConfig, name: str = "block") -> None:
    """Null subcarriers must carry exactly zero."""
    if not cfg.nulls:
        return
    idx = sorted(cfg.nulls)
    if np.any(values[..., idx] != 0):
        raise ValueError(f"{name} has nonzero values on null subcarriers {idx}")
