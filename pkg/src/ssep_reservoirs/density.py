"""Expected-density evolution for the channel with finite reservoirs.

Writing rho(0) = n_minus/M and rho(N+1) = n_plus/M for the reservoir
densities, the site expectations close into the linear system

    d rho(x)/dt = 1/2 (rho(x-1) + rho(x+1) - 2 rho(x)),   x = 1..N,
    d rho(0)/dt = 1/(2M) (rho(1) - rho(0)),
    d rho(N+1)/dt = 1/(2M) (rho(N) - rho(N+1)),

which is also the generator of the sticky random walk acting on site
functions; ``evolve`` therefore doubles as the exact transition-kernel
engine for that walk (see ``walk_transition_matrix``).  The weighted
mass  sum_{1..N} rho(x) + M (rho(0) + rho(N+1))  is conserved exactly.

Two integration paths are provided: a fixed-step classical Runge-Kutta
scheme with step-halving verification, and an eigendecomposition of the
(reversible, hence symmetrizable) generator for long horizons.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .model import BoundaryDensities, InitialCondition, SystemParams

# Out-of-range beyond this is treated as integrator misuse and raises;
# profiles are never clamped.
_RANGE_SLACK = 1e-7

_RK4_STEP_CAP = 0.25
# Switch to the eigendecomposition path when the fixed-step count gets large.
_AUTO_EIGEN_STEPS = 50_000


@dataclass
class DensityProfile:
    """Site densities on the extended lattice 0..N+1 at one instant."""

    rho: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.rho = np.ascontiguousarray(self.rho, dtype=np.float64)
        if self.rho.ndim != 1 or self.rho.shape[0] < 4:
            raise ValueError("rho must be one-dimensional with at least 4 entries")
        _check_range(self.rho)

    @property
    def n_sites(self) -> int:
        return self.rho.shape[0] - 2


def _check_range(rho: np.ndarray) -> None:
    if not np.all(np.isfinite(rho)):
        raise ValueError("density profile contains non-finite entries")
    if rho.min() < -_RANGE_SLACK or rho.max() > 1.0 + _RANGE_SLACK:
        raise ValueError(
            "density profile leaves [0, 1] by more than "
            f"{_RANGE_SLACK:g} (min {rho.min():g}, max {rho.max():g})"
        )


def initial_profile(initial: InitialCondition, params: SystemParams) -> DensityProfile:
    """Deterministic expected profile at t = 0 for the given initial data."""
    rho = np.empty(params.N + 2)
    rho[1:-1] = initial.channel_profile(params)
    rho[0] = initial.boundary.v_minus
    rho[-1] = initial.boundary.v_plus
    return DensityProfile(rho, 0.0)


def mass_functional(profile: DensityProfile, params: SystemParams) -> float:
    """sum_{x=1..N} rho(x) + M (rho(0) + rho(N+1)); conserved by ``evolve``."""
    rho = profile.rho
    return float(rho[1:-1].sum() + params.M * (rho[0] + rho[-1]))


def _drift(rho: np.ndarray, inv_2m: float, out: np.ndarray) -> np.ndarray:
    out[1:-1] = 0.5 * (rho[:-2] + rho[2:] - 2.0 * rho[1:-1])
    out[0] = inv_2m * (rho[1] - rho[0])
    out[-1] = inv_2m * (rho[-2] - rho[-1])
    return out


def _rk4(rho: np.ndarray, inv_2m: float, dt_total: float, dt: float) -> np.ndarray:
    steps = max(1, int(math.ceil(dt_total / dt)))
    h = dt_total / steps
    y = rho.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    for _ in range(steps):
        _drift(y, inv_2m, k1)
        _drift(y + 0.5 * h * k1, inv_2m, k2)
        _drift(y + 0.5 * h * k2, inv_2m, k3)
        _drift(y + h * k3, inv_2m, k4)
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


_eigen_cache: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _eigen_system(params: SystemParams):
    """Eigendecomposition of the generator, symmetrized by the reversible
    weights (M, 1, ..., 1, M)."""
    key = (params.N, params.M)
    hit = _eigen_cache.get(key)
    if hit is not None:
        return hit
    n = params.N + 2
    inv_2m = 0.5 / params.M
    a = np.zeros((n, n))
    for x in range(1, n - 1):
        a[x, x - 1] = 0.5
        a[x, x + 1] = 0.5
        a[x, x] = -1.0
    a[0, 0] = -inv_2m
    a[0, 1] = inv_2m
    a[-1, -1] = -inv_2m
    a[-1, -2] = inv_2m
    w = np.ones(n)
    w[0] = w[-1] = params.M
    sqrt_w = np.sqrt(w)
    sym = a * (sqrt_w[:, None] / sqrt_w[None, :])
    lam, q = np.linalg.eigh(sym)
    _eigen_cache[key] = (lam, q, sqrt_w)
    return lam, q, sqrt_w


def _evolve_eigen(rho: np.ndarray, params: SystemParams, dt_total: float) -> np.ndarray:
    lam, q, sqrt_w = _eigen_system(params)
    coeff = q.T @ (rho * sqrt_w)
    return (q @ (np.exp(lam * dt_total) * coeff)) / sqrt_w


def walk_transition_matrix(params: SystemParams, t: float) -> np.ndarray:
    """Exact transition probabilities p_t(x, y) of the sticky walk on 0..N+1."""
    if t < 0:
        raise ValueError("t must be >= 0")
    lam, q, sqrt_w = _eigen_system(params)
    # e^{tA} = D^{-1/2} Q e^{t lam} Q^T D^{1/2}
    core = (q * np.exp(lam * t)) @ q.T
    return core * (sqrt_w[None, :] / sqrt_w[:, None])


def evolve(
    profile: DensityProfile,
    params: SystemParams,
    dt_total: float,
    *,
    tol: float = 1e-8,
    method: str = "auto",
) -> DensityProfile:
    """Advance the closed density system by ``dt_total``.

    method "rk4" uses fixed-step classical Runge-Kutta with a
    step-halving (Richardson) verification pass; "eigen" applies the
    exact matrix exponential through the symmetrized eigensystem;
    "auto" picks eigen when the step count would be large.
    """
    if dt_total < 0:
        raise ValueError("dt_total must be >= 0")
    rho = profile.rho
    _check_range(rho)
    if dt_total == 0:
        return DensityProfile(rho.copy(), profile.t)
    if method not in ("auto", "rk4", "eigen"):
        raise ValueError(f"unknown method {method!r}")

    inv_2m = 0.5 / params.M
    # Per-unit-time tolerance -> fixed step via the classical local error
    # model err/step ~ (L dt)^5 / (120 dt) with ||L|| <= 2.
    dt = min(_RK4_STEP_CAP, (tol * 120.0 / 32.0) ** 0.25)
    steps = int(math.ceil(dt_total / dt))
    if method == "auto":
        method = "eigen" if steps > _AUTO_EIGEN_STEPS else "rk4"

    if method == "eigen":
        out = _evolve_eigen(rho, params, dt_total)
    else:
        out = _rk4(rho, inv_2m, dt_total, dt)
        fine = _rk4(rho, inv_2m, dt_total, dt / 2.0)
        err = float(np.max(np.abs(out - fine))) / 15.0
        if err > tol * max(1.0, dt_total):
            raise ArithmeticError(
                f"step-halving check failed: estimated error {err:g} "
                f"exceeds tol {tol:g} over horizon {dt_total:g}"
            )
        out = fine
    _check_range(out)
    return DensityProfile(out, profile.t + dt_total)


_dirichlet_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _dirichlet_eigen(n_sites: int):
    hit = _dirichlet_cache.get(n_sites)
    if hit is not None:
        return hit
    b = np.zeros((n_sites, n_sites))
    for x in range(n_sites):
        b[x, x] = -1.0
        if x > 0:
            b[x, x - 1] = 0.5
        if x < n_sites - 1:
            b[x, x + 1] = 0.5
    lam, q = np.linalg.eigh(b)
    _dirichlet_cache[n_sites] = (lam, q)
    return lam, q


def dirichlet_stationary(n_sites: int, boundary: BoundaryDensities) -> np.ndarray:
    """Discrete linear interpolation v_- + x (v_+ - v_-)/(N+1) on x = 1..N."""
    x = np.arange(1, n_sites + 1)
    return boundary.v_minus + x * (boundary.v_plus - boundary.v_minus) / (n_sites + 1)


def evolve_dirichlet(
    rho_channel: np.ndarray,
    boundary: BoundaryDensities,
    dt_total: float,
) -> np.ndarray:
    """Channel densities with the extended sites pinned at (v_-, v_+).

    This is the ideal-reservoir comparison system: same bulk exchange,
    boundary densities held fixed.  Solved exactly through the Dirichlet
    eigensystem (the affine shift by the discrete stationary line makes
    the problem homogeneous).
    """
    if dt_total < 0:
        raise ValueError("dt_total must be >= 0")
    rho = np.ascontiguousarray(rho_channel, dtype=np.float64)
    if rho.ndim != 1 or rho.shape[0] < 2:
        raise ValueError("rho_channel must be one-dimensional with N >= 2")
    _check_range(rho)
    line = dirichlet_stationary(rho.shape[0], boundary)
    lam, q = _dirichlet_eigen(rho.shape[0])
    coeff = q.T @ (rho - line)
    out = line + q @ (np.exp(lam * dt_total) * coeff)
    _check_range(out)
    return out


def duality_residual(
    profile: DensityProfile,
    params: SystemParams,
    x: int,
    t: float,
    runs: int,
    rng,
) -> tuple[float, float]:
    """|ODE value - Monte Carlo dual-walk estimate| at extended site x.

    The dual representation reads rho(x, t) = E_x[rho(X(t), 0)] with X
    the sticky walk started from x.  Returns (absolute difference,
    standard error of the Monte Carlo side).
    """
    from .walk import estimate_dual_expectation  # local import to avoid a cycle

    if not 0 <= x <= params.N + 1:
        raise ValueError(f"extended site x must lie in [0, {params.N + 1}]")
    ode_val = float(evolve(profile, params, t, method="eigen").rho[x])
    mc_val, se = estimate_dual_expectation(profile.rho, params, x, t, runs, rng)
    return abs(ode_val - mc_val), se


def flux_identity_residual(
    profile: DensityProfile,
    params: SystemParams,
    l: float,
    t0: float,
    t1: float,
    step: float = 1e-2,
) -> float:
    """Residual of the conservation identity for the mass left of l.

    With x = floor(l N), the time derivative of sum_{y<=x} rho(y) equals
    the instantaneous flux 1/2 (rho(x+1) - rho(x)) + 1/2 (rho(0) - rho(1)).
    The flux is integrated over [t0, t1] by composite Simpson quadrature
    along the exactly-evolved trajectory and compared with the change in
    partial mass; the residual measures quadrature error only.
    """
    if not 0.0 < l <= 1.0:
        raise ValueError("l must lie in (0, 1]")
    if t1 <= t0:
        raise ValueError("need t1 > t0")
    if step <= 0:
        raise ValueError("step must be positive")
    x = max(1, int(math.floor(l * params.N)))
    panels = int(math.ceil((t1 - t0) / step))
    if panels % 2:
        panels += 1
    h = (t1 - t0) / panels
    flux = np.empty(panels + 1)
    partial0 = partial1 = 0.0
    for j in range(panels + 1):
        rho = evolve(profile, params, t0 + j * h, method="eigen").rho
        flux[j] = 0.5 * (rho[x + 1] - rho[x]) + 0.5 * (rho[0] - rho[1])
        if j == 0:
            partial0 = rho[1 : x + 1].sum()
        if j == panels:
            partial1 = rho[1 : x + 1].sum()
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    integral = (h / 3.0) * float(weights @ flux)
    return abs((partial1 - partial0) - integral)


# -- serialization ----------------------------------------------------------

def profile_to_csv(profile: DensityProfile) -> str:
    """CSV rows ``x,rho`` over the extended sites, fixed %.12g formatting."""
    buf = io.StringIO()
    buf.write("x,rho\n")
    for x, v in enumerate(profile.rho):
        buf.write("%d,%.12g\n" % (x, v))
    return buf.getvalue()


def profile_from_csv(text: str) -> DensityProfile:
    lines = [ln for ln in text.strip().splitlines() if ln]
    if not lines or lines[0] != "x,rho":
        raise ValueError("expected a 'x,rho' header")
    vals = []
    for i, ln in enumerate(lines[1:]):
        xs, vs = ln.split(",")
        if int(xs) != i:
            raise ValueError("site indices must be consecutive from 0")
        vals.append(float(vs))
    return DensityProfile(np.array(vals))


def profile_to_json(profile: DensityProfile) -> str:
    """JSON array of the extended-site densities, %.12g precision."""
    return json.dumps([float("%.12g" % v) for v in profile.rho])


def profile_from_json(text: str) -> DensityProfile:
    vals = json.loads(text)
    if not isinstance(vals, list):
        raise ValueError("expected a JSON array")
    return DensityProfile(np.array(vals, dtype=np.float64))
