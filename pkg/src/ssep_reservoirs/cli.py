"""Command-line driver.

Subcommands map to the four limit regimes plus the invariant suite:

  ssep ideal     --n 50 --alpha 0.5 --alpha-prime 0.25 --t 1 --out a.csv
  ssep adiabatic --n 50 --alpha 0.5 --t 0.5 --t 1 --t 2 --engine ode
  ssep global    --n 20 --alpha 0.25 --alpha-prime 0.75 --t 1
  ssep chaos     --n 20 --k 5000 --pair 0.33,0.67 --out cov.json --format json
  ssep verify

Flags may come from a config file (flat key=value lines, `--config`);
explicit command-line flags win.  `SSEP_THREADS` caps worker processes.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import verify as verify_mod
from .harness import (
    BudgetError,
    ExperimentSpec,
    emit,
    render,
    run_chaos_experiment,
    run_experiment,
)
from .limits import LimitRegime
from .model import BoundaryDensities, InitialCondition, SystemParams

_DEFAULTS = {
    "n": 50,
    "alpha": 0.5,
    "alpha_prime": None,  # regime-dependent, resolved per subcommand
    "t": [1.0],
    "k": 2000,
    "seed": 0,
    "engine": "ode",
    "u0": "linear",
    "v_minus": 1.0,
    "v_plus": 0.0,
    "out": None,
    "format": "csv",
    "budget_events": 1e9,
    "workers": None,
    "pair": ["0.333,0.667"],
}


def make_u0(preset: str):
    """Initial profile presets: const:c, linear, sine, step:a,b."""
    if preset == "linear":
        return lambda r: np.asarray(r, dtype=float)
    if preset == "sine":
        return lambda r: np.sin(np.pi * np.asarray(r, dtype=float))
    if preset.startswith("const:"):
        c = float(preset.split(":", 1)[1])
        if not 0 <= c <= 1:
            raise ValueError("const level must lie in [0, 1]")
        return lambda r: np.full_like(np.asarray(r, dtype=float), c)
    if preset.startswith("step:"):
        a, b = (float(v) for v in preset.split(":", 1)[1].split(","))
        if not (0 <= a <= 1 and 0 <= b <= 1):
            raise ValueError("step levels must lie in [0, 1]")
        return lambda r: np.where(np.asarray(r, dtype=float) < 0.5, a, b)
    raise ValueError(f"unknown u0 preset {preset!r} "
                     "(expected const:c, linear, sine, or step:a,b)")


def read_config(path) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    settings = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            settings[key.strip().replace("-", "_")] = value.strip()
    unknown = set(settings) - set(_DEFAULTS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return settings


def _coerce(key: str, value: str):
    if key in ("n", "k", "seed", "workers"):
        return int(value)
    if key in ("alpha", "alpha_prime", "v_minus", "v_plus", "budget_events"):
        return float(value)
    if key == "t":
        return [float(v) for v in value.split(",")]
    if key == "pair":
        return value.split(";")
    return value


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value settings file; flags override it")
    sub.add_argument("--n", type=int, help="channel size N")
    sub.add_argument("--alpha", type=float, help="reservoir exponent (M = N^(1+alpha))")
    sub.add_argument("--alpha-prime", type=float, dest="alpha_prime",
                     help="time-scale exponent a' (horizon N^(2+a') t)")
    sub.add_argument("--t", type=float, action="append",
                     help="macroscopic time (repeatable)")
    sub.add_argument("--k", type=int, help="KMC replicate count")
    sub.add_argument("--seed", type=int, help="base RNG seed")
    sub.add_argument("--engine", choices=("ode", "kmc", "both"))
    sub.add_argument("--u0", help="initial profile preset: const:c, linear, sine, step:a,b")
    sub.add_argument("--v-minus", type=float, dest="v_minus", help="left reservoir density")
    sub.add_argument("--v-plus", type=float, dest="v_plus", help="right reservoir density")
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--format", choices=("csv", "json"), help="output format")
    sub.add_argument("--budget-events", type=float, dest="budget_events",
                     help="refuse runs whose estimated KMC event count exceeds this")
    sub.add_argument("--workers", type=int, help="worker processes (SSEP_THREADS also caps)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssep",
        description="Exclusion-channel-with-finite-reservoirs simulator and checker",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("ideal", "fixed-boundary regimes: heat equation (a'=0) or the "
                  "stationary line (0 < a' < alpha)"),
        ("adiabatic", "slow boundary relaxation regime (a' = alpha)"),
        ("global", "uniform equilibrium regime (a' > alpha)"),
    ):
        sub = subs.add_parser(name, help=blurb)
        _add_common(sub)
    chaos = subs.add_parser("chaos", help="two-point occupation covariances (KMC)")
    _add_common(chaos)
    chaos.add_argument("--pair", action="append",
                       help="macroscopic pair r1,r2 (repeatable)")
    ver = subs.add_parser("verify", help="run the structural invariant suite")
    ver.add_argument("--seed", type=int, default=0)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        for key, value in read_config(args.config).items():
            merged[key] = _coerce(key, value)
    for key in merged:
        given = getattr(args, key, None)
        if given is not None:
            merged[key] = given
    return merged


def _default_alpha_prime(command: str, alpha: float) -> float:
    if command == "ideal":
        return 0.0
    if command == "adiabatic":
        return alpha
    return alpha + 0.5  # global


def _spec_from(command: str, cfg: dict) -> ExperimentSpec:
    alpha_prime = cfg["alpha_prime"]
    if alpha_prime is None:
        alpha_prime = _default_alpha_prime(command, cfg["alpha"])
    regime = LimitRegime.classify(cfg["alpha"], alpha_prime)
    expected = {
        "ideal": ("ideal_hydrodynamic", "ideal_stationary"),
        "adiabatic": ("adiabatic",),
        "global": ("global",),
        "chaos": ("ideal_hydrodynamic", "ideal_stationary", "adiabatic", "global"),
    }[command]
    if regime.kind not in expected:
        raise ValueError(
            f"alpha'={alpha_prime} with alpha={cfg['alpha']} is the "
            f"{regime.kind} regime; use that subcommand (or change --alpha-prime)"
        )
    boundary = BoundaryDensities(cfg["v_minus"], cfg["v_plus"])
    initial = InitialCondition(make_u0(cfg["u0"]), boundary)
    engine = "kmc" if command == "chaos" else cfg["engine"]
    return ExperimentSpec(
        regime=regime,
        params=SystemParams(N=cfg["n"], alpha=cfg["alpha"]),
        initial=initial,
        times=tuple(sorted(cfg["t"])),
        replicates=cfg["k"] if engine in ("kmc", "both") else 0,
        seed=cfg["seed"],
        engine=engine,
        budget_events=cfg["budget_events"],
        workers=cfg["workers"],
    )


def _write(result, cfg: dict) -> None:
    if cfg["out"] is None:
        sys.stdout.write(render(result, cfg["format"]))
    else:
        emit(result, cfg["format"], cfg["out"])
        print(f"wrote {cfg['out']}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify":
        return 1 if verify_mod.run_all(seed=args.seed) else 0
    try:
        cfg = _resolve(args)
        spec = _spec_from(args.command, cfg)
        if args.command == "chaos":
            pairs = []
            for item in cfg["pair"]:
                r1, r2 = (float(v) for v in item.split(","))
                pairs.append((r1, r2))
            result = run_chaos_experiment(spec, pairs)
        else:
            result = run_experiment(spec)
    except BudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write(result, cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
