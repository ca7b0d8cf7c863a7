"""The sticky random walk dual to the channel-with-reservoirs process.

A single walker on the extended lattice {0, .., N+1} jumps left/right
at rate 1/2 from interior sites and escapes the endpoint sites at rate
1/(2M) only, so the endpoints are sticky with holding scale 2M.  The
walk is reversible with respect to the weights (M, 1, ..., 1, M).

Expected channel densities satisfy rho(x, t) = E_x[rho(X(t), 0)], which
is what ties this walk to the particle system; the Monte Carlo side of
that identity lives here.  The module also evaluates the transition
kernel of the limiting Brownian motion sticky at one point.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfcx as _erfcx

from ._backend import kernels
from .engine import RngStream, _as_generator, _worker_count
from .model import SystemParams

_WALK_CHUNK = 4096


@dataclass
class WalkState:
    """Walker position on {0..N+1} and its elapsed clock."""

    position: int
    clock: float = 0.0


@dataclass(frozen=True)
class HittingRecord:
    """First boundary hit: time tau and side ("left" or "right")."""

    tau: float
    side: str


@dataclass
class LocalTimeAccumulator:
    """Time the reflected walk has spent at the endpoint sites."""

    boundary_time: float = 0.0

    def add(self, dt: float) -> None:
        self.boundary_time += dt


def _check_site(x0: int, params: SystemParams) -> None:
    if not 0 <= x0 <= params.N + 1:
        raise ValueError(f"x0 must lie in [0, {params.N + 1}], got {x0}")


def simulate_sticky(x0: int, t: float, params: SystemParams, rng) -> int:
    """Position of the sticky walk at time t, started from x0."""
    _check_site(x0, params)
    if t < 0:
        raise ValueError("t must be >= 0")
    gen = _as_generator(rng)
    rnd = gen.random
    slow = 1.0 / (2.0 * params.M)
    top = params.N + 1
    x = x0
    clock = 0.0
    while True:
        rate = slow if (x == 0 or x == top) else 1.0
        dt = -math.log1p(-rnd()) / rate
        if clock + dt > t:
            return x
        clock += dt
        if x == 0:
            x = 1
        elif x == top:
            x = params.N
        else:
            x += -1 if rnd() < 0.5 else 1


def simulate_via_time_change(
    x0: int,
    t: float,
    params: SystemParams,
    rng,
    local_time: LocalTimeAccumulator | None = None,
) -> int:
    """Sticky-walk position at time t realized through the reflected walk.

    The reflected simple walk holds at rate 1 everywhere (at an endpoint
    both half-rate attempts point inward); the sticky clock runs at
    speed 1 in the interior and speed 2M at the endpoints, i.e. the
    endpoint local time is stretched by 2M.  With the same draw
    sequence and M a power of two this reproduces ``simulate_sticky``
    jump for jump; for general M the two agree in law.
    """
    _check_site(x0, params)
    if t < 0:
        raise ValueError("t must be >= 0")
    gen = _as_generator(rng)
    rnd = gen.random
    factor = 2.0 * params.M
    top = params.N + 1
    x = x0
    clock = 0.0
    while True:
        dt = -math.log1p(-rnd())
        at_boundary = x == 0 or x == top
        inc = dt * factor if at_boundary else dt
        if clock + inc > t:
            if local_time is not None and at_boundary:
                local_time.add((t - clock) / factor)
            return x
        clock += inc
        if local_time is not None and at_boundary:
            local_time.add(dt)
        if x == 0:
            x = 1
        elif x == top:
            x = params.N
        else:
            x += -1 if rnd() < 0.5 else 1


def first_hitting(x0: int, params: SystemParams, rng) -> HittingRecord:
    """First hit of {0, N+1} by the walk started from an interior site.

    Until that time the walk is the plain symmetric walk, so the side
    follows the gambler's-ruin law 1 - x0/(N+1) and the mean time is
    x0 (N+1-x0).
    """
    if not 1 <= x0 <= params.N:
        raise ValueError(f"x0 must be an interior site in [1, {params.N}]")
    gen = _as_generator(rng)
    taus = np.empty(1)
    sides = np.empty(1, dtype=np.uint8)
    kernels.first_hit_many(gen, x0, params.N, 1, taus, sides)
    return HittingRecord(float(taus[0]), "left" if sides[0] == 0 else "right")


def first_hitting_sample(
    x0: int, params: SystemParams, runs: int, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Hitting times and sides (0 = left) over ``runs`` independent walks."""
    if not 1 <= x0 <= params.N:
        raise ValueError(f"x0 must be an interior site in [1, {params.N}]")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    gen = _as_generator(rng)
    taus = np.empty(runs)
    sides = np.empty(runs, dtype=np.uint8)
    kernels.first_hit_many(gen, x0, params.N, runs, taus, sides)
    return taus, sides


def _walk_chunk(payload):
    seed, stream, index, chunk_runs, x0, t, n_sites, m_size, time_change = payload
    gen = RngStream(seed, stream).substream(index).generator()
    counts = np.zeros(n_sites + 2, dtype=np.int64)
    fn = kernels.sticky_tc_many if time_change else kernels.sticky_many
    fn(gen, x0, t, n_sites, m_size, chunk_runs, counts)
    return index, counts


def sticky_counts(
    x0: int,
    t: float,
    params: SystemParams,
    runs: int,
    rng: RngStream,
    *,
    time_change: bool = False,
    workers: int | None = None,
) -> np.ndarray:
    """End-position histogram of ``runs`` independent sticky walks."""
    _check_site(x0, params)
    if t < 0:
        raise ValueError("t must be >= 0")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not isinstance(rng, RngStream):
        raise TypeError("ensemble functions need an RngStream to derive substreams")
    payloads = []
    start = 0
    index = 0
    while start < runs:
        chunk = min(_WALK_CHUNK, runs - start)
        payloads.append(
            (rng.seed, rng.stream, index, chunk, x0, t, params.N, params.M, time_change)
        )
        start += chunk
        index += 1
    n_workers = _worker_count(workers, len(payloads))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = sorted(pool.map(_walk_chunk, payloads), key=lambda r: r[0])
    else:
        results = [_walk_chunk(p) for p in payloads]
    counts = np.zeros(params.N + 2, dtype=np.int64)
    for _, c in results:
        counts += c
    return counts


def transition_probability_mc(
    x0: int,
    y: int,
    t: float,
    params: SystemParams,
    runs: int,
    rng: RngStream,
    *,
    workers: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of p_t(x0, y) with its binomial standard error."""
    _check_site(y, params)
    counts = sticky_counts(x0, t, params, runs, rng, workers=workers)
    p = counts[y] / runs
    return float(p), math.sqrt(p * (1.0 - p) / runs)


def estimate_dual_expectation(
    rho0: np.ndarray,
    params: SystemParams,
    x: int,
    t: float,
    runs: int,
    rng: RngStream,
    *,
    workers: int | None = None,
) -> tuple[float, float]:
    """Monte Carlo E_x[rho0(X(t))] over the sticky walk, with standard error."""
    rho0 = np.asarray(rho0, dtype=np.float64)
    if rho0.shape[0] != params.N + 2:
        raise ValueError("rho0 must cover the extended sites 0..N+1")
    counts = sticky_counts(x, t, params, runs, rng, workers=workers)
    mean = float(counts @ rho0) / runs
    var = float(counts @ (rho0 - mean) ** 2) / max(1, runs - 1)
    return mean, math.sqrt(var / runs)


# -- complementary error function and the sticky Brownian kernel ------------

def erfc(x: float) -> float:
    """Erfc(x) = integral_x^inf (2/sqrt(pi)) e^{-z^2} dz."""
    return math.erfc(x)


def exp_erfc(a: float, b: float) -> float:
    """e^a Erfc(b) evaluated as erfcx(b) e^{a - b^2} to avoid overflow.

    Safe whenever a - b^2 is moderate, which holds for every kernel
    evaluation below (there a - b^2 = -q^2/(2t) <= 0).
    """
    return math.exp(a - b * b) * float(_erfcx(b))


def sticky_bm_kernel(x: float, y: float, t: float) -> tuple[float, float]:
    """Transition kernel of Brownian motion sticky at 1, coefficient 1/2.

    Positions are absolute; the process holds at the single point 1 for
    a positive fraction of time.  Returns (continuous density at y,
    atom weight at y = 1); the atom weight does not depend on y.  With
    q = |x-1| + |y-1| the continuous part reads

        (e^{-(x-y)^2/2t} - e^{-q^2/2t}) / sqrt(2 pi t)
          + 1/2 e^{q + t/2} Erfc(sqrt(t/2) + q/sqrt(2t))

    and the atom weight is e^{|x-1| + t/2} Erfc(sqrt(t/2) + |x-1|/sqrt(2t)).
    Total mass (integral plus atom) is exactly 1 for every (x, t).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    u = x - 1.0
    v = y - 1.0
    q = abs(u) + abs(v)
    sqrt_2t = math.sqrt(2.0 * t)
    gauss = (
        math.exp(-((u - v) ** 2) / (2.0 * t)) - math.exp(-(q * q) / (2.0 * t))
    ) / math.sqrt(2.0 * math.pi * t)
    tail = 0.5 * exp_erfc(q + 0.5 * t, 0.5 * sqrt_2t + q / sqrt_2t)
    atom = exp_erfc(abs(u) + 0.5 * t, 0.5 * sqrt_2t + abs(u) / sqrt_2t)
    return gauss + tail, atom
