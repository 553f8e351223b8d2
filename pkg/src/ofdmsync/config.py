"""Static system configuration and impairment parameters.

Conventions used throughout the package:

* The DFT/IDFT pair is unitary (1/sqrt(N) both ways), so signal power is
  identical in both domains.
* ``cfo`` is the residual carrier frequency offset normalized to the
  subcarrier spacing 1/(N*t_s); ``sfo`` is the relative sample-clock error
  (T_rx - T_tx)/T_tx.
* Subcarrier indices run 0..n-1 and the matching tone frequencies are
  k/(n*t_s), i.e. the upper half of the index range is *not* folded onto
  negative frequencies.  Mirrored index pairs summing to a region constant
  rely on this.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class Constellation:
    """Symbol alphabet: ``kind`` is 'psk' or 'qam', ``order`` its size.

    Points are normalized to unit average power.  PSK uses the natural
    angular order (index i -> exp(2j*pi*i/order)); square QAM uses
    row-major grid order.  No Gray mapping is applied anywhere: symbol
    payloads are never pushed through a detector in this package.
    """

    kind: str
    order: int

    def __post_init__(self) -> None:
        if self.kind not in ("psk", "qam"):
            raise ValueError(f"unknown constellation kind {self.kind!r}")
        if self.order < 2:
            raise ValueError("constellation order must be >= 2")
        if self.kind == "qam":
            side = round(self.order ** 0.5)
            if side * side != self.order:
                raise ValueError("QAM order must be a perfect square")

    @property
    def is_constant_modulus(self) -> bool:
        return self.kind == "psk"

    def __str__(self) -> str:
        return f"{self.kind}{self.order}"


_CONSTELLATION_RE = re.compile(r"^(psk|qam)[-_]?(\d+)$", re.IGNORECASE)


def parse_constellation(text: str) -> Constellation:
    """Parse a spec like ``'psk16'`` or ``'qam-64'``."""
    m = _CONSTELLATION_RE.match(text.strip())
    if m is None:
        raise ValueError(f"cannot parse constellation spec {text!r}")
    return Constellation(m.group(1).lower(), int(m.group(2)))


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SystemConfig:
    """Static OFDM dimensions and subcarrier roles.

    Parameters
    ----------
    n : int
        Subcarrier count (power of two).
    n_g : int
        Guard (cyclic prefix) length in samples, ``0 <= n_g <= n``.
    m : int
        Number of OFDM blocks per frame.
    q : int
        Number of subcarrier regions used by the estimator (even, divides n).
    t_s : float
        Nominal sample interval in seconds.
    f_c : float
        Carrier frequency in Hz (only used to convert terminal speed into a
        Doppler bandwidth).
    constellation : Constellation
    pilots, data, nulls : frozenset[int]
        Disjoint role sets partitioning ``range(n)``.  Default: every
        subcarrier is a pilot, which is the all-pilot/genie reference mode.
    """

    n: int = 512
    n_g: int = 64
    m: int = 10
    q: int = 4
    t_s: float = 100e-9
    f_c: float = 5e9
    constellation: Constellation = Constellation("psk", 16)
    pilots: Optional[frozenset[int]] = None
    data: frozenset[int] = field(default_factory=frozenset)
    nulls: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not _is_power_of_two(self.n):
            raise ValueError("n must be a power of two")
        if not 0 <= self.n_g <= self.n:
            raise ValueError("n_g must satisfy 0 <= n_g <= n")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.q < 2 or self.q % 2 != 0:
            raise ValueError("q must be even and >= 2")
        if self.n % self.q != 0:
            raise ValueError("n must be divisible by q")
        if self.t_s <= 0:
            raise ValueError("t_s must be positive")
        if self.pilots is None:
            object.__setattr__(
                self, "pilots", frozenset(range(self.n)) - self.data - self.nulls
            )
        all_k = frozenset(range(self.n))
        roles = (self.pilots, self.data, self.nulls)
        if (
            self.pilots | self.data | self.nulls != all_k
            or sum(len(r) for r in roles) != self.n
        ):
            raise ValueError("pilots/data/nulls must partition range(n)")

    @property
    def n_b(self) -> int:
        """Total block length n + n_g."""
        return self.n + self.n_g

    @property
    def g(self) -> float:
        """Relative guard length n_g / n."""
        return self.n_g / self.n

    @property
    def block_duration(self) -> float:
        """Duration of one OFDM block in seconds."""
        return self.n_b * self.t_s


@dataclass(frozen=True)
class ImpairmentParams:
    """Ground-truth residual offsets and noise level for one scenario.

    ``cfo`` is dimensionless (offset over subcarrier spacing), ``sfo`` is the
    relative clock error, ``noise_var`` the complex noise variance per sample
    or per tone (the unitary DFT keeps them equal).
    """

    cfo: float = 0.0
    sfo: float = 0.0
    noise_var: float = 0.0
    seed: object = None

    def __post_init__(self) -> None:
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")

    def max_pair_rotation(self, cfg: SystemConfig) -> float:
        """Largest |2*cfo + sfo*S| over region pair sums S.

        The per-block phase increment seen by the estimator is this value
        times 2*pi*(1+g); sequential unwrapping is only unambiguous while
        the increment stays below pi.
        """
        sums = [(cfg.n + 2 * cfg.n * k) / cfg.q for k in range(cfg.q)]
        return max(abs(2 * self.cfo + self.sfo * s) for s in sums)

    def is_estimable(self, cfg: SystemConfig) -> bool:
        """True when the offsets sit inside the unambiguous unwrap range."""
        return self.max_pair_rotation(cfg) < 1.0 / (2.0 * (1.0 + cfg.g))
