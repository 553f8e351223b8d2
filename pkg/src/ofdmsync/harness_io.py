"""Result rows, CSV emission and the scenario file parser.

CSV schema: ``snr_db,mse_eta,mse_eps,bias_eta,bias_eps,var_eta_pred,
var_eps_pred,trials,mode``.  Sweep rows prepend their sweep key as an extra
first column (named ``eta``, ``eps``, ``kappa`` or ``speed_kmh``).  Floats
are written with shortest round-trip precision (>= 12 significant digits),
so emission is byte-stable and parse-back is exact.

Scenario files are flat ``key = value`` lines with ``#`` comments; keys
mirror the Scenario fields and unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

_CSV_FIELDS = (
    "snr_db", "mse_eta", "mse_eps", "bias_eta", "bias_eps",
    "var_eta_pred", "var_eps_pred", "trials", "mode",
)


@dataclass(frozen=True)
class MseRow:
    """Aggregated Monte-Carlo results for one sweep point.

    ``mse_* >= bias_*^2`` up to accumulation rounding; ``trials`` counts the
    trials that entered the averages, ``failures`` the rejected ones (kept
    out of the CSV schema).
    """

    snr_db: float
    mse_eta: float
    mse_eps: float
    bias_eta: float
    bias_eps: float
    var_eta_pred: float
    var_eps_pred: float
    trials: int
    mode: str
    key_name: Optional[str] = None
    key: Optional[float] = None
    failures: int = 0


def _fmt(value: float) -> str:
    return repr(float(value))


def render_csv(rows: Sequence[MseRow]) -> str:
    """Render rows to CSV text (deterministic for fixed inputs)."""
    if not rows:
        raise ValueError("no rows to emit")
    key_names = {r.key_name for r in rows}
    if len(key_names) != 1:
        raise ValueError("rows mix different sweep keys")
    key_name = rows[0].key_name
    header = list(_CSV_FIELDS) if key_name is None else [key_name, *_CSV_FIELDS]
    lines = [",".join(header)]
    for r in rows:
        cells = [] if key_name is None else [_fmt(r.key)]
        cells += [
            _fmt(r.snr_db), _fmt(r.mse_eta), _fmt(r.mse_eps),
            _fmt(r.bias_eta), _fmt(r.bias_eps),
            _fmt(r.var_eta_pred), _fmt(r.var_eps_pred),
            str(r.trials), r.mode,
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_csv(rows: Sequence[MseRow], path) -> None:
    """Write rows to ``path``; same rows produce byte-identical files."""
    text = render_csv(rows)
    try:
        Path(path).write_text(text, encoding="ascii", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


_SCALAR_PARSERS = {
    "n": int, "n_g": int, "m": int, "q": int,
    "t_s": float, "f_c": float,
    "constellation": str,
    "cfo": float, "sfo": float,
    "trials": int,
    "channel": str, "l_taps": int, "speed_kmh": float,
    "csi": str, "kappa": float,
    "mode": str, "model": str,
    "seed": int,
}


def parse_scenario_file(source) -> "Scenario":  # noqa: F821  (late import)
    """Parse a scenario description from a path or literal text.

    Lines are ``key = value``; blank lines and ``#`` comments are skipped.
    ``snr_db`` takes a comma-separated list.  Unknown keys raise ValueError.
    """
    from .harness import Scenario

    text = source
    p = Path(str(source))
    if "\n" not in str(source) and p.is_file():
        text = p.read_text()
    fields: dict = {}
    for lineno, raw in enumerate(str(text).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key == "snr_db":
            fields[key] = tuple(float(v) for v in value.split(","))
        elif key in _SCALAR_PARSERS:
            fields[key] = _SCALAR_PARSERS[key](value)
        else:
            raise ValueError(f"line {lineno}: unknown scenario key {key!r}")
    return Scenario(**fields)
