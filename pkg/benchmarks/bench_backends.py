#!/usr/bin/env python3
"""Throughput comparison of the compiled and pure-Python kernel backends.

Runs the two hot loops (channel KMC trajectories and sticky-walk
batches) on identical seeds through ``ssep_reservoirs._core`` and
``ssep_reservoirs._core_py``, checks the outputs are bitwise identical,
and prints wall time plus speedup.  Workload sizes are adjustable so the
pure-Python side stays affordable::

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --kmc-reps 100 --walk-runs 20000
"""

import argparse
import importlib
import time

import numpy as np

from ssep_reservoirs.engine import RngStream
from ssep_reservoirs.model import BoundaryDensities, InitialCondition, SystemParams, sample_config

_core_py = importlib.import_module("ssep_reservoirs._core_py")
try:
    _core = importlib.import_module("ssep_reservoirs._core")
except ImportError:
    _core = None


def bench_kmc(mod, params, configs, t_total):
    start = time.perf_counter()
    outs = []
    for i, config in enumerate(configs):
        eta = config.eta.copy()
        out = mod.kmc_run(
            RngStream(1000, stream=i).generator(),
            eta,
            config.n_minus,
            config.n_plus,
            params.M,
            t_total,
            False,
        )
        outs.append((out, eta))
    return time.perf_counter() - start, outs


def bench_walk(mod, params, x0, t, runs, time_change):
    counts = np.zeros(params.N + 2, dtype=np.int64)
    kernel = mod.sticky_tc_many if time_change else mod.sticky_many
    start = time.perf_counter()
    kernel(RngStream(2000).generator(), x0, t, params.N, params.M, runs, counts)
    return time.perf_counter() - start, counts


def report(label, unit, amount, wall_py, wall_c):
    rate_py = amount / wall_py
    line = f"{label:<28} python {wall_py:8.3f} s ({rate_py:12.1f} {unit}/s)"
    if wall_c is not None:
        rate_c = amount / wall_c
        line += f"   compiled {wall_c:8.3f} s ({rate_c:12.1f} {unit}/s)   speedup {wall_py / wall_c:6.1f}x"
    print(line)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmc-reps", type=int, default=20, help="KMC trajectories per backend")
    ap.add_argument("--kmc-t", type=float, default=200.0, help="microscopic horizon per trajectory")
    ap.add_argument("--walk-runs", type=int, default=5000, help="sticky walks per backend")
    ap.add_argument("--walk-t", type=float, default=100.0, help="walk horizon")
    args = ap.parse_args(argv)

    if _core is None:
        print("compiled backend not importable; timing the pure-Python backend only")

    params = SystemParams(N=50, alpha=0.5)
    ic = InitialCondition(lambda r: 0.8 - 0.6 * r, BoundaryDensities(0.8, 0.2))
    configs = [
        sample_config(ic, params, RngStream(3000, stream=i).generator())
        for i in range(args.kmc_reps)
    ]
    print(
        f"KMC: N={params.N} M={params.M}, t={args.kmc_t:g}, "
        f"{args.kmc_reps} trajectories; walks: N=20, t={args.walk_t:g}, "
        f"{args.walk_runs} runs"
    )

    wall_py, out_py = bench_kmc(_core_py, params, configs, args.kmc_t)
    wall_c = None
    if _core is not None:
        wall_c, out_c = bench_kmc(_core, params, configs, args.kmc_t)
        for (a, ea), (b, eb) in zip(out_py, out_c):
            assert a == b and np.array_equal(ea, eb), "backend outputs diverged"
    sim_time = args.kmc_reps * args.kmc_t
    report("kmc_run", "sim-time units", sim_time, wall_py, wall_c)

    wp = SystemParams(N=20, alpha=0.5)
    for label, tc in (("sticky_many", False), ("sticky_tc_many", True)):
        wall_py, counts_py = bench_walk(_core_py, wp, 7, args.walk_t, args.walk_runs, tc)
        wall_c = None
        if _core is not None:
            wall_c, counts_c = bench_walk(_core, wp, 7, args.walk_t, args.walk_runs, tc)
            assert np.array_equal(counts_py, counts_c), "backend outputs diverged"
        report(label, "walks", args.walk_runs, wall_py, wall_c)


if __name__ == "__main__":
    main()
