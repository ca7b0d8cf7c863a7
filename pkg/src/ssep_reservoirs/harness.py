"""Experiment orchestration: regimes to error tables.

An experiment names a scaling regime, converts each macroscopic time t
to the microscopic horizon N^(2+a') t, runs the requested engine (ODE
expectation solver, KMC ensemble, or both), probes the profile on a
fixed macroscopic grid, and tabulates errors against the analytic
reference for that regime.  Tables serialize to CSV or JSON with stable
formatting so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import density, limits
from .engine import RngStream, ensemble_density
from .model import InitialCondition, SystemParams

# Macroscopic probe positions; the ends read the reservoir fractions at
# extended sites 0 and N+1, interior points map to round(r*N).
PROBE_GRID = tuple(round(0.1 * i, 1) for i in range(11))

_ENGINES = ("ode", "kmc", "both")

CSV_COLUMNS = (
    "regime", "N", "alpha", "alpha_prime", "t", "site_or_pair",
    "measured", "reference", "abs_err", "se", "seed",
)

# Published schema for the JSON emit format (draft 2020-12).
JSON_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["meta", "rows"],
    "additionalProperties": False,
    "properties": {
        "meta": {
            "type": "object",
            "required": ["regime", "N", "alpha", "alpha_prime", "engine",
                         "replicates", "seed", "wall_clock_s"],
            "additionalProperties": False,
            "properties": {
                "regime": {"enum": ["ideal_hydrodynamic", "ideal_stationary",
                                    "adiabatic", "global"]},
                "N": {"type": "integer", "minimum": 2},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "alpha_prime": {"type": "number", "minimum": 0},
                "engine": {"enum": ["ode", "kmc", "both", "chaos"]},
                "replicates": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer"},
                "wall_clock_s": {"type": "number", "minimum": 0},
            },
        },
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["regime", "N", "alpha", "alpha_prime", "t",
                             "site_or_pair", "measured", "reference",
                             "abs_err", "se", "seed"],
                "additionalProperties": False,
                "properties": {
                    "regime": {"type": "string"},
                    "N": {"type": "integer"},
                    "alpha": {"type": "number"},
                    "alpha_prime": {"type": "number"},
                    "t": {"type": "number"},
                    "site_or_pair": {"type": "string"},
                    "measured": {"type": "number"},
                    "reference": {"type": "number"},
                    "abs_err": {"type": "number", "minimum": 0},
                    "se": {"type": ["number", "null"], "minimum": 0},
                    "seed": {"type": ["integer", "null"]},
                },
            },
        },
    },
}


class BudgetError(RuntimeError):
    """Estimated event count exceeds the configured budget."""


def _g12(value: float) -> float:
    # Round through the emit format once so tables hold exactly what
    # files will contain and round-trips are lossless.
    return float("%.12g" % float(value))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.12g" % float(value)


@dataclass(frozen=True)
class ExperimentSpec:
    """One regime run: geometry, initial data, times, engine, seeding."""

    regime: limits.LimitRegime
    params: SystemParams
    initial: InitialCondition
    times: tuple[float, ...]
    replicates: int = 0
    seed: int = 0
    engine: str = "ode"
    budget_events: float = 1e9
    workers: int | None = None

    def __post_init__(self):
        if self.engine not in _ENGINES:
            raise ValueError(f"engine must be one of {_ENGINES}, got {self.engine!r}")
        times = tuple(float(t) for t in self.times)
        if not times or any(t <= 0 for t in times) or list(times) != sorted(times):
            raise ValueError("times must be a non-empty sorted tuple of positives")
        object.__setattr__(self, "times", times)
        if self.engine in ("kmc", "both") and self.replicates < 2:
            raise ValueError("KMC engines need replicates >= 2")
        self.regime.validate_against(self.params.alpha)

    def horizon(self, t: float) -> float:
        return float(self.params.N ** (2.0 + self.regime.alpha_prime) * t)


@dataclass
class ExperimentResult:
    """Row-per-probe error table plus run metadata."""

    meta: dict
    rows: list[dict] = field(default_factory=list)

    def sup_error(self, t: float | None = None) -> float:
        picked = [r["abs_err"] for r in self.rows if t is None or r["t"] == _g12(t)]
        return max(picked) if picked else 0.0


def probe_site(r: float, n_sites: int) -> int:
    """Macroscopic position to probed lattice site.

    The ends map to the reservoir sites 0 and N+1; interior positions
    round to the nearest channel site (kept inside 1..N).
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError("probe position must lie in [0, 1]")
    if r == 0.0:
        return 0
    if r == 1.0:
        return n_sites + 1
    return min(max(int(np.floor(r * n_sites + 0.5)), 1), n_sites)


def reference_profile(spec: ExperimentSpec, r, t: float):
    """Analytic limit value at macroscopic (r, t) for the spec's regime."""
    kind = spec.regime.kind
    bd = spec.initial.boundary
    r_arr = np.asarray(r, dtype=np.float64)
    if kind == "ideal_hydrodynamic":
        out = limits.heat_solution(spec.initial.u0, bd, r_arr, t)
    elif kind == "ideal_stationary":
        out = limits.stationary_profile(bd, r_arr)
    elif kind == "adiabatic":
        out = limits.adiabatic_profile(bd, r_arr, t)
    else:
        out = np.full_like(r_arr, limits.global_equilibrium(bd))
    return np.asarray(out, dtype=np.float64)


def estimated_events(spec: ExperimentSpec) -> float:
    """Upper bound on KMC events: total jump rate is at most N/2 + 1."""
    if spec.engine == "ode":
        return 0.0
    return (spec.params.N / 2.0 + 1.0) * spec.horizon(spec.times[-1]) * spec.replicates


def _check_budget(spec: ExperimentSpec) -> None:
    est = estimated_events(spec)
    if est > spec.budget_events:
        raise BudgetError(
            f"estimated {est:.3g} KMC events exceed the budget "
            f"{spec.budget_events:.3g}; raise --budget-events or shrink the run"
        )


def _base_row(spec: ExperimentSpec, t: float) -> dict:
    return {
        "regime": spec.regime.kind,
        "N": spec.params.N,
        "alpha": _g12(spec.params.alpha),
        "alpha_prime": _g12(spec.regime.alpha_prime),
        "t": _g12(t),
    }


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run all requested times and engines; return the error table.

    ODE rows carry no SE or seed; KMC rows carry both.  With
    engine="both" the two row sets are emitted side by side (ODE rows
    first at each time) so consumers can difference them.
    """
    _check_budget(spec)
    started = time.perf_counter()
    n = spec.params.N
    sites = [probe_site(r, n) for r in PROBE_GRID]
    rows: list[dict] = []
    for ti, t in enumerate(spec.times):
        refs = reference_profile(spec, np.array(PROBE_GRID), t)
        horizon = spec.horizon(t)
        if spec.engine in ("ode", "both"):
            prof = density.evolve(density.initial_profile(spec.initial, spec.params),
                                  spec.params, horizon)
            for r, x, ref in zip(PROBE_GRID, sites, refs):
                row = _base_row(spec, t)
                row.update(site_or_pair=_fmt(r), measured=_g12(prof.rho[x]),
                           reference=_g12(ref), abs_err=_g12(abs(prof.rho[x] - ref)),
                           se=None, seed=None)
                rows.append(row)
        if spec.engine in ("kmc", "both"):
            stats = ensemble_density(spec.initial, spec.params, horizon,
                                     spec.replicates, RngStream(spec.seed).substream(ti),
                                     workers=spec.workers)
            for r, x, ref in zip(PROBE_GRID, sites, refs):
                row = _base_row(spec, t)
                row.update(site_or_pair=_fmt(r), measured=_g12(stats.means[x]),
                           reference=_g12(ref), abs_err=_g12(abs(stats.means[x] - ref)),
                           se=_g12(stats.se[x]), seed=spec.seed)
                rows.append(row)
    meta = {
        "regime": spec.regime.kind,
        "N": n,
        "alpha": _g12(spec.params.alpha),
        "alpha_prime": _g12(spec.regime.alpha_prime),
        "engine": spec.engine,
        "replicates": spec.replicates if spec.engine != "ode" else 0,
        "seed": spec.seed,
        "wall_clock_s": _g12(time.perf_counter() - started),
    }
    return ExperimentResult(meta=meta, rows=rows)


def run_chaos_experiment(spec: ExperimentSpec, r_pairs) -> ExperimentResult:
    """Two-point occupation covariances at macroscopic site pairs.

    Reference is the ideal-reservoir value 0; rows carry the jackknife
    SE of each covariance.
    """
    if spec.engine != "kmc":
        raise ValueError("chaos experiments are KMC-only")
    _check_budget(spec)
    started = time.perf_counter()
    n = spec.params.N
    site_pairs = []
    for r1, r2 in r_pairs:
        x1 = min(max(int(np.floor(float(r1) * n + 0.5)), 1), n)
        x2 = min(max(int(np.floor(float(r2) * n + 0.5)), 1), n)
        if x1 == x2:
            raise ValueError(f"pair {(r1, r2)} collapses to one site at N={n}")
        site_pairs.append((x1, x2))
    rows: list[dict] = []
    for ti, t in enumerate(spec.times):
        stats = ensemble_density(spec.initial, spec.params, spec.horizon(t),
                                 spec.replicates, RngStream(spec.seed).substream(ti),
                                 pairs=tuple(site_pairs), workers=spec.workers)
        for x1, x2 in site_pairs:
            cov, se = stats.pair_cov[(x1, x2)]
            row = _base_row(spec, t)
            row.update(site_or_pair=f"{x1}-{x2}", measured=_g12(cov),
                       reference=0.0, abs_err=_g12(abs(cov)), se=_g12(se),
                       seed=spec.seed)
            rows.append(row)
    meta = {
        "regime": spec.regime.kind,
        "N": n,
        "alpha": _g12(spec.params.alpha),
        "alpha_prime": _g12(spec.regime.alpha_prime),
        "engine": "chaos",
        "replicates": spec.replicates,
        "seed": spec.seed,
        "wall_clock_s": _g12(time.perf_counter() - started),
    }
    return ExperimentResult(meta=meta, rows=rows)


def render(result: ExperimentResult, fmt: str) -> str:
    """Serialize the table (CSV or JSON) with stable key order and floats."""
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in result.rows:
            lines.append(",".join(_fmt(row[c]) for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps({"meta": result.meta, "rows": result.rows},
                          sort_keys=True, indent=1) + "\n"
    raise ValueError(f"format must be csv or json, got {fmt!r}")


def emit(result: ExperimentResult, fmt: str, path) -> None:
    """Write the table to a file; identical results give identical bytes."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render(result, fmt))


def _parse_cell(column: str, text: str):
    if text == "":
        return None
    if column in ("N", "seed"):
        return int(text)
    if column in ("regime", "site_or_pair"):
        return text
    return float(text)


def read_result_csv(path) -> list[dict]:
    """Parse an emitted CSV back into the row-dict form."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError("not an experiment CSV (bad header)")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ValueError(f"bad CSV row: {ln!r}")
        rows.append({c: _parse_cell(c, p) for c, p in zip(CSV_COLUMNS, parts)})
    return rows


def read_result_json(path) -> ExperimentResult:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return ExperimentResult(meta=payload["meta"], rows=payload["rows"])
