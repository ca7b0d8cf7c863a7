"""Exact event-driven simulation of the channel-with-reservoirs process.

Rejection-free kinetic Monte Carlo: waiting times are exponential at the
total active rate and events are picked proportionally to their rates,
so trajectories follow the generator exactly (no time discretisation).
Ensembles fan out over replicates, each driven by its own counter-based
random stream, which makes results independent of the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .model import (
    InitialCondition,
    ParticleConfig,
    SystemParams,
    boundary_rate_left,
    boundary_rate_right,
)

_MASK64 = (1 << 64) - 1
# Replicates are processed in fixed-size chunks so that merge order (and
# hence floating-point sums) do not depend on how many workers run.
_CHUNK = 256


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream addressed by (seed, stream id).

    Identical (seed, stream) always reproduces the identical draw
    sequence.  ``substream`` derives per-replicate streams; keep the
    parent stream id below 2^32 so derived ids cannot collide.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = ((self.seed & _MASK64) << 64) | (self.stream & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, index: int) -> "RngStream":
        if index < 0:
            raise ValueError("substream index must be >= 0")
        return RngStream(self.seed, ((self.stream << 32) | index) & _MASK64)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or numpy Generator")


@dataclass
class EnsembleStats:
    """Replicate-averaged occupation statistics on the extended sites.

    ``means[x]`` is the mean occupation of site x for x = 1..N and the
    mean reservoir fraction n_-/M (resp. n_+/M) at x = 0 (resp. N+1).
    ``pair_cov`` maps requested channel site pairs to (covariance,
    jackknife standard error).
    """

    means: np.ndarray
    se: np.ndarray
    pair_cov: dict[tuple[int, int], tuple[float, float]]
    replicates: int


def kmc_step(config: ParticleConfig, params: SystemParams, rng) -> tuple[ParticleConfig, float]:
    """Apply one event; returns (new configuration, waiting time).

    In an absorbing state (no active event) the configuration is
    returned unchanged with dt = +inf.
    """
    config.validate(params)
    gen = _as_generator(rng)
    eta = config.eta
    active = [b for b in range(params.N - 1) if eta[b] != eta[b + 1]]
    c_left = boundary_rate_left(config, params)
    c_right = boundary_rate_right(config, params)
    na = len(active)
    total = 0.5 * na + c_left + c_right
    if total <= 0.0:
        return config.copy(), math.inf
    dt = -math.log1p(-gen.random()) / total
    v = gen.random() * total
    out = config.copy()
    if v < 0.5 * na:
        k = int(v * 2.0)
        if k >= na:
            k = na - 1
        b = active[k]
        out.eta[b], out.eta[b + 1] = eta[b + 1], eta[b]
    elif v < 0.5 * na + c_left:
        if eta[0]:
            out.eta[0] = 0
            out.n_minus += 1
        else:
            out.eta[0] = 1
            out.n_minus -= 1
    else:
        if eta[-1]:
            out.eta[-1] = 0
            out.n_plus += 1
        else:
            out.eta[-1] = 1
            out.n_plus -= 1
    return out, dt


def run_until(
    config: ParticleConfig,
    params: SystemParams,
    t_total: float,
    rng,
    include_null: bool = False,
) -> ParticleConfig:
    """State at time t_total of the chain started from ``config``."""
    config.validate(params)
    if t_total < 0:
        raise ValueError("t_total must be >= 0")
    gen = _as_generator(rng)
    eta = config.eta.copy()
    n_minus, n_plus = kernels.kmc_run(
        gen, eta, config.n_minus, config.n_plus, params.M, t_total, include_null
    )
    return ParticleConfig(eta, int(n_minus), int(n_plus))


def _sample_from_probs(probs, m_size, v_minus, v_plus, deterministic, gen):
    """Shared initial sampler; fixed draw order across call sites."""
    eta = (gen.random(probs.shape[0]) < probs).astype(np.uint8)
    if deterministic:
        n_minus = int(round(m_size * v_minus))
        n_plus = int(round(m_size * v_plus))
    else:
        n_minus = int(gen.binomial(m_size, v_minus))
        n_plus = int(gen.binomial(m_size, v_plus))
    return eta, n_minus, n_plus


def _density_chunk(payload):
    (seed, stream, start, stop, probs, m_size, v_minus, v_plus, deterministic,
     t_total, pairs, include_null) = payload
    n = probs.shape[0]
    sum_occ = np.zeros(n + 2)
    sum_sq = np.zeros(n + 2)
    cells = {p: np.zeros(4, dtype=np.int64) for p in pairs}
    occ = np.empty(n + 2)
    parent = RngStream(seed, stream)
    for i in range(start, stop):
        gen = parent.substream(i).generator()
        eta, n_minus, n_plus = _sample_from_probs(
            probs, m_size, v_minus, v_plus, deterministic, gen
        )
        n_minus, n_plus = kernels.kmc_run(
            gen, eta, n_minus, n_plus, m_size, t_total, include_null
        )
        occ[0] = n_minus / m_size
        occ[1:-1] = eta
        occ[-1] = n_plus / m_size
        sum_occ += occ
        sum_sq += occ * occ
        for (x1, x2), cell in cells.items():
            cell[2 * int(eta[x1 - 1]) + int(eta[x2 - 1])] += 1
    return start, sum_occ, sum_sq, cells


def _worker_count(workers, n_chunks) -> int:
    if workers is None:
        workers = os.cpu_count() or 1
    cap = os.environ.get("SSEP_THREADS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, min(workers, n_chunks))


def _pair_stats(cell, runs) -> tuple[float, float]:
    """Plug-in covariance of two occupation bits with its jackknife SE.

    The four joint outcomes are the only distinct leave-one-out values,
    so the jackknife is exact from the 2x2 cell counts alone.
    """
    n11, n10, n01, n00 = (int(c) for c in cell)
    s_ab = n11
    s_a = n11 + n10
    s_b = n11 + n01
    cov = s_ab / runs - (s_a / runs) * (s_b / runs)
    km = runs - 1
    vals = []
    weights = []
    for a, b, n in ((1, 1, n11), (1, 0, n10), (0, 1, n01), (0, 0, n00)):
        if n == 0:
            continue
        vals.append((s_ab - a * b) / km - ((s_a - a) / km) * ((s_b - b) / km))
        weights.append(n)
    vals_arr = np.array(vals)
    w_arr = np.array(weights, dtype=np.float64)
    vbar = float(w_arr @ vals_arr) / runs
    se = math.sqrt(max(0.0, (runs - 1) / runs * float(w_arr @ (vals_arr - vbar) ** 2)))
    return cov, se


def ensemble_density(
    initial: InitialCondition,
    params: SystemParams,
    t_total: float,
    runs: int,
    rng: RngStream,
    *,
    pairs: tuple[tuple[int, int], ...] = (),
    workers: int | None = None,
    include_null: bool = False,
) -> EnsembleStats:
    """Mean occupation per extended site over ``runs`` independent replicates."""
    if runs < 2:
        raise ValueError("need at least 2 replicates")
    if t_total < 0:
        raise ValueError("t_total must be >= 0")
    if not isinstance(rng, RngStream):
        raise TypeError("ensemble functions need an RngStream to derive substreams")
    pairs = tuple((int(a), int(b)) for a, b in pairs)
    for x1, x2 in pairs:
        if x1 == x2 or not (1 <= x1 <= params.N and 1 <= x2 <= params.N):
            raise ValueError(f"pair sites must be distinct channel sites, got {(x1, x2)}")
    probs = initial.channel_profile(params)
    b = initial.boundary
    starts = list(range(0, runs, _CHUNK))
    payloads = [
        (rng.seed, rng.stream, s, min(s + _CHUNK, runs), probs, params.M,
         b.v_minus, b.v_plus, initial.deterministic_reservoirs, t_total, pairs,
         include_null)
        for s in starts
    ]
    n_workers = _worker_count(workers, len(payloads))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = sorted(pool.map(_density_chunk, payloads), key=lambda r: r[0])
    else:
        results = [_density_chunk(p) for p in payloads]

    sum_occ = np.zeros(params.N + 2)
    sum_sq = np.zeros(params.N + 2)
    cells = {p: np.zeros(4, dtype=np.int64) for p in pairs}
    for _, occ, sq, cell in results:
        sum_occ += occ
        sum_sq += sq
        for p in pairs:
            cells[p] += cell[p]
    means = sum_occ / runs
    var = np.maximum(0.0, (sum_sq - runs * means**2) / (runs - 1))
    se = np.sqrt(var / runs)
    pair_cov = {p: _pair_stats(cells[p], runs) for p in pairs}
    return EnsembleStats(means, se, pair_cov, runs)


def two_point_covariance(
    initial: InitialCondition,
    params: SystemParams,
    t_total: float,
    x1: int,
    x2: int,
    runs: int,
    rng: RngStream,
    *,
    workers: int | None = None,
) -> tuple[float, float]:
    """Covariance of the occupations at channel sites (x1, x2) at time t.

    Returns (covariance, jackknife standard error); vanishing covariance
    at fixed macroscopic positions is the propagation-of-chaos signal.
    """
    stats = ensemble_density(
        initial, params, t_total, runs, rng, pairs=((x1, x2),), workers=workers
    )
    return stats.pair_cov[(x1, x2)]


def reservoir_trajectory(
    initial: InitialCondition,
    params: SystemParams,
    horizon: float,
    sample_times,
    rng,
) -> np.ndarray:
    """Reservoir fractions along one trajectory.

    Returns an array of rows (t, n_-/M, n_+/M) at the given sample
    times, which must be increasing and within the horizon.
    """
    times = np.asarray(sample_times, dtype=np.float64)
    if times.ndim != 1 or times.shape[0] == 0:
        raise ValueError("sample_times must be a non-empty 1-d sequence")
    if np.any(np.diff(times) <= 0) or times[0] < 0:
        raise ValueError("sample_times must be strictly increasing and >= 0")
    if times[-1] > horizon:
        raise ValueError("sample_times must not exceed the horizon")
    gen = _as_generator(rng)
    probs = initial.channel_profile(params)
    bdry = initial.boundary
    eta, n_minus, n_plus = _sample_from_probs(
        probs, params.M, bdry.v_minus, bdry.v_plus,
        initial.deterministic_reservoirs, gen,
    )
    out_minus = np.empty(times.shape[0], dtype=np.int64)
    out_plus = np.empty(times.shape[0], dtype=np.int64)
    kernels.kmc_run_record(
        gen, eta, n_minus, n_plus, params.M, times, out_minus, out_plus, False
    )
    return np.column_stack([times, out_minus / params.M, out_plus / params.M])
