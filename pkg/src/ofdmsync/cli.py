"""Command-line front end: scenario runs, parameter sweeps, predictions."""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from .harness import (
    Scenario,
    emit_csv,
    parse_scenario_file,
    run_scenario,
    sweep_eps,
    sweep_eta,
    sweep_kappa,
    sweep_mobility,
)
from .variance import var_a1a2a3, var_intercept


def _add_common(p: argparse.ArgumentParser, with_out: bool = True) -> None:
    p.add_argument("--scenario", required=True, help="scenario file (key = value lines)")
    if with_out:
        p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--trials", type=int, help="override trial count")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--mode", choices=["weighted", "simplified"], help="override combining mode")
    p.add_argument("--model", choices=["time", "freq"], help="override synthesis model")


def _load(args: argparse.Namespace) -> Scenario:
    s = parse_scenario_file(args.scenario)
    overrides = {
        k: getattr(args, k)
        for k in ("trials", "seed", "mode", "model")
        if getattr(args, k, None) is not None
    }
    return dataclasses.replace(s, **overrides) if overrides else s


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofdmsync",
        description="Monte-Carlo MSE experiments for residual CFO/SFO estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("run", help="run the scenario over its SNR list"))

    p = sub.add_parser("sweep-eta", help="sweep the clock offset at fixed SNR")
    _add_common(p)
    p.add_argument("--min", type=float, default=-1e-4)
    p.add_argument("--max", type=float, default=1e-4)
    p.add_argument("--steps", type=int, default=5)

    p = sub.add_parser("sweep-eps", help="sweep the carrier offset at fixed SNR")
    _add_common(p)
    p.add_argument("--min", type=float, default=-0.1)
    p.add_argument("--max", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=5)

    p = sub.add_parser("sweep-kappa", help="sweep channel-knowledge accuracy")
    _add_common(p)
    p.add_argument("--values", type=_float_list, default=[0.0, 0.1, 0.2, 0.3, 0.4, 0.5])

    p = sub.add_parser("sweep-mobility", help="sweep terminal speed with stale CSI")
    _add_common(p)
    p.add_argument("--speeds", type=_float_list, default=[0.0, 50.0, 100.0, 150.0, 200.0])

    p = sub.add_parser("predict", help="print closed-form variance predictions")
    p.add_argument("--config", required=True, help="scenario file supplying the system config")
    return parser


def _predict(path: str) -> None:
    s = parse_scenario_file(path)
    cfg = s.config()
    for snr_db in s.snr_db:
        base = var_a1a2a3(cfg, 10.0 ** (snr_db / 10.0))
        alt = var_intercept(cfg, base)
        print(
            f"snr_db={snr_db:g} "
            f"var_eta={base.var_eta!r} var_eps={base.var_eps!r} "
            f"var_eta_intercept={alt.var_eta!r} var_eps_intercept={alt.var_eps!r}"
        )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "predict":
            _predict(args.config)
            return 0
        scenario = _load(args)
        if args.command == "run":
            rows = run_scenario(scenario)
        elif args.command == "sweep-eta":
            rows = sweep_eta(scenario, np.linspace(args.min, args.max, args.steps).tolist())
        elif args.command == "sweep-eps":
            rows = sweep_eps(scenario, np.linspace(args.min, args.max, args.steps).tolist())
        elif args.command == "sweep-kappa":
            rows = sweep_kappa(scenario, args.values)
        else:
            rows = sweep_mobility(scenario, args.speeds)
        emit_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
