"""Fast self-checks of the structural identities behind the solvers.

Each check prints one PASS/FAIL line; `run_all` returns the failure
count so the CLI can exit nonzero.  Everything here is either exact
(enumeration, eigendecomposition) or high-count Monte Carlo with wide
margins, so a FAIL means a real defect rather than bad luck.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import density, limits, model, walk
from ._backend import kernels
from .engine import RngStream, ensemble_density, run_until
from .model import (
    BoundaryDensities,
    InitialCondition,
    ParticleConfig,
    SystemParams,
    boundary_rate_left,
    boundary_rate_right,
)


def _report(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return ok


def check_detailed_balance(n_sites: int = 3, m_size: int = 2, c: float = 0.4) -> bool:
    """Product Bernoulli(c) x Binomial(M, c)^2 balances every transition.

    Enumerates the full state space and tests pi(s) rate(s->s') =
    pi(s') rate(s'->s) for each admissible jump.
    """
    params = SystemParams(N=n_sites, alpha=1.0, M=m_size)

    def weight(cfg: ParticleConfig) -> float:
        w = 1.0
        for bit in cfg.eta:
            w *= c if bit else (1.0 - c)
        for count in (cfg.n_minus, cfg.n_plus):
            w *= math.comb(m_size, count) * c**count * (1.0 - c) ** (m_size - count)
        return w

    worst = 0.0
    for bits in itertools.product((0, 1), repeat=n_sites):
        for nm in range(m_size + 1):
            for npl in range(m_size + 1):
                cfg = ParticleConfig(np.array(bits, dtype=np.uint8), nm, npl)
                moves = []
                for x in range(1, n_sites):
                    rate = model.bulk_exchange_rate(cfg, x)
                    if rate > 0:
                        moves.append((rate, model.apply_bulk_exchange(cfg, x)))
                rate = boundary_rate_left(cfg, params)
                if rate > 0:
                    moves.append((rate, model.apply_boundary_exchange_left(cfg, params)))
                rate = boundary_rate_right(cfg, params)
                if rate > 0:
                    moves.append((rate, model.apply_boundary_exchange_right(cfg, params)))
                for rate, nxt in moves:
                    back = [b for b in _rates_to(nxt, cfg, params)]
                    forward = weight(cfg) * rate
                    backward = weight(nxt) * sum(back)
                    worst = max(worst, abs(forward - backward) / max(forward, 1e-300))
    return _report("detailed-balance", worst < 1e-12,
                   f"max relative imbalance {worst:.2e} over the enumerated space")


def _rates_to(src: ParticleConfig, dst: ParticleConfig, params: SystemParams):
    for x in range(1, src.eta.shape[0]):
        if model.bulk_exchange_rate(src, x) > 0 and model.apply_bulk_exchange(src, x) == dst:
            yield model.bulk_exchange_rate(src, x)
    if boundary_rate_left(src, params) > 0:
        if model.apply_boundary_exchange_left(src, params) == dst:
            yield boundary_rate_left(src, params)
    if boundary_rate_right(src, params) > 0:
        if model.apply_boundary_exchange_right(src, params) == dst:
            yield boundary_rate_right(src, params)


def check_mass_conservation(seed: int = 0) -> bool:
    params = SystemParams(N=12, alpha=0.5)
    bd = BoundaryDensities(0.9, 0.1)
    init = InitialCondition(lambda r: r * (1 - r) + 0.3, bd)
    ok = True
    for rep in range(20):
        cfg = model.sample_config(init, params, RngStream(seed, stream=rep).generator())
        before = model.total_particles(cfg)
        out = run_until(cfg, params, 50.0, RngStream(seed + 1, stream=rep))
        ok = ok and model.total_particles(out) == before
    prof = density.initial_profile(init, params)
    m0 = density.mass_functional(prof, params)
    ev = density.evolve(prof, params, 500.0)
    drift = abs(density.mass_functional(ev, params) - m0) / m0
    ok = ok and drift < 1e-9
    return _report("mass-conservation", ok,
                   f"20/20 KMC trajectories integer-exact; ODE drift {drift:.2e}")


def check_solver_agreement() -> bool:
    params = SystemParams(N=10, alpha=0.5)
    init = InitialCondition(lambda r: 0.5 + 0.4 * np.sin(2 * np.pi * r),
                            BoundaryDensities(0.7, 0.2))
    prof = density.initial_profile(init, params)
    a = density.evolve(prof, params, 40.0, method="rk4")
    b = density.evolve(prof, params, 40.0, method="eigen")
    gap = float(np.max(np.abs(a.rho - b.rho)))
    return _report("rk4-vs-eigen", gap < 1e-7, f"max gap {gap:.2e}")


def check_duality(seed: int = 2) -> bool:
    params = SystemParams(N=4, alpha=1.0, M=7)
    rho0 = np.linspace(0.1, 0.9, params.N + 2)
    prof = density.DensityProfile(rho0, 0.0)
    bad = 0
    for i, (x, t) in enumerate([(0, 1.0), (2, 3.0), (3, 8.0), (5, 2.0)]):
        gap, se = density.duality_residual(prof, params, x, t, 40_000,
                                           RngStream(seed, stream=i))
        bad += gap > 4.0 * se
    return _report("duality", bad == 0, f"{4 - bad}/4 probes within 4 SE")


def check_walk_structure(seed: int = 3) -> bool:
    params = SystemParams(N=9, alpha=1.0)
    taus, sides = walk.first_hitting_sample(5, params, 20_000, RngStream(seed))
    p_left = float(np.mean(sides == 0))
    se = math.sqrt(p_left * (1 - p_left) / len(sides))
    ok = abs(p_left - limits.gambler_ruin_left(5, 9)) <= 3 * se
    # exact reversibility through the eigendecomposition path
    p5 = SystemParams(N=5, alpha=1.0, M=11)
    pt = density.walk_transition_matrix(p5, 7.0)
    rev = float(np.max(np.abs(p5.M * pt[0, 1:6] - pt[1:6, 0])))
    rowsum = float(np.max(np.abs(pt.sum(axis=1) - 1.0)))
    ok = ok and rev < 1e-12 and rowsum < 1e-12
    return _report("sticky-walk", ok,
                   f"gambler dev {abs(p_left - 0.5):.4f} (3se {3*se:.4f}); "
                   f"reversibility {rev:.1e}; row sums {rowsum:.1e}")


def check_time_change(seed: int = 4) -> bool:
    params = SystemParams(N=5, alpha=1.0, M=11)
    runs = 30_000
    direct = walk.sticky_counts(3, 50.0, params, runs, RngStream(seed))
    via_tc = walk.sticky_counts(3, 50.0, params, runs, RngStream(seed + 1),
                                time_change=True)
    tv = 0.5 * float(np.abs(direct / runs - via_tc / runs).sum())
    return _report("time-change", tv <= 0.03, f"TV distance {tv:.4f} at K={runs}")


def check_kernel() -> bool:
    from scipy.integrate import quad

    worst = 0.0
    for x, t in ((1.0, 1.0), (0.0, 0.5), (2.0, 2.0)):
        cont = quad(lambda y: walk.sticky_bm_kernel(x, y, t)[0],
                    -np.inf, np.inf, limit=400)[0]
        atom = walk.sticky_bm_kernel(x, 1.0, t)[1]
        worst = max(worst, abs(cont + atom - 1.0))
    return _report("bm-kernel", worst < 1e-6, f"max |mass - 1| = {worst:.2e}")


def check_flux() -> bool:
    params = SystemParams(N=16, alpha=0.5)
    init = InitialCondition(lambda r: 0.5 + 0.3 * np.sin(np.pi * r),
                            BoundaryDensities(0.8, 0.3))
    prof = density.initial_profile(init, params)
    worst = max(density.flux_identity_residual(prof, params, l, 0.0, 25.0)
                for l in (0.3, 0.7, 1.0))
    return _report("flux-identity", worst < 1e-6, f"max residual {worst:.2e}")


def check_backend(seed: int = 5) -> bool:
    from . import _core_py

    if kernels.BACKEND == "python":
        return _report("backend", True, "pure-python backend active (no compiled twin)")
    eta_a = (np.arange(10) % 2).astype(np.uint8)
    eta_b = eta_a.copy()
    ra = _core_py.kmc_run(RngStream(seed).generator(), eta_a, 4, 9, 16, 30.0, False)
    rb = kernels.kmc_run(RngStream(seed).generator(), eta_b, 4, 9, 16, 30.0, False)
    ok = np.array_equal(eta_a, eta_b) and tuple(ra) == tuple(rb)
    return _report("backend", ok, "compiled and python trajectories bit-identical")


def check_stationarity(seed: int = 6) -> bool:
    params = SystemParams(N=8, alpha=1.0)
    c = 0.35
    init = InitialCondition(lambda r: c + 0.0 * r, BoundaryDensities(c, c))
    stats = ensemble_density(init, params, 60.0, 4000, RngStream(seed))
    dev = np.abs(stats.means - c) / stats.se
    worst = float(np.max(dev))
    return _report("stationarity", worst <= 4.0,
                   f"max |mean - {c}|/SE = {worst:.2f} from equilibrium start")


def run_all(seed: int = 0) -> int:
    checks = [
        check_detailed_balance,
        check_mass_conservation,
        check_solver_agreement,
        check_duality,
        check_walk_structure,
        check_time_change,
        check_kernel,
        check_flux,
        check_backend,
        check_stationarity,
    ]
    failures = 0
    for chk in checks:
        try:
            ok = chk()
        except Exception as exc:  # a crashed check is a failed check
            ok = _report(chk.__name__, False, f"raised {type(exc).__name__}: {exc}")
        failures += not ok
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return failures
