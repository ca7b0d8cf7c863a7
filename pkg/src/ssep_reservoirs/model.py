"""State space and elementary transitions of the exclusion channel.

The system is a simple symmetric exclusion process on the channel sites
1..N, exchanging particles with two finite reservoirs that are tracked
only through their occupation counts ``n_minus``, ``n_plus`` in [0, M].
Bulk bonds swap neighbouring occupations at rate 1/2.  The boundary
sites trade with their reservoir at rate

    c_right = 1/2 (1 - n_plus/M) eta(N) + 1/2 (n_plus/M) (1 - eta(N))

and the mirrored expression on the left.  A deposit is only slowed by a
nearly full reservoir, a withdrawal by a nearly empty one, so the total
particle number (channel plus both reservoirs) is conserved by every
transition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class InvalidTransitionError(ValueError):
    """Raised when a transition whose rate is zero is applied."""


@dataclass(frozen=True)
class SystemParams:
    """Channel size N, reservoir exponent alpha and reservoir size M.

    M defaults to round(N^(1+alpha)); passing M explicitly overrides the
    scaling relation (used by tests that pin small reservoirs).
    """

    N: int
    alpha: float
    M: Optional[int] = None

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"need at least two channel sites, got N={self.N}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.M is None:
            object.__setattr__(self, "M", int(round(self.N ** (1.0 + self.alpha))))
        if self.M < 1:
            raise ValueError(f"reservoir size must be >= 1, got M={self.M}")

    @property
    def epsilon(self) -> float:
        return 1.0 / self.N


@dataclass(frozen=True)
class BoundaryDensities:
    """Reservoir densities (v_minus, v_plus), each in [0, 1]."""

    v_minus: float
    v_plus: float

    def __post_init__(self):
        for name, v in (("v_minus", self.v_minus), ("v_plus", self.v_plus)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class InitialCondition:
    """Macroscopic initial data: profile u0 on [0, 1] plus reservoir densities.

    ``u0`` is evaluated at x/N for channel sites; values must lie in
    [0, 1] (checked when the condition is materialised).  Reservoirs are
    sampled Binomial(M, v) unless ``deterministic_reservoirs`` is set, in
    which case n = round(M v).
    """

    u0: Callable[[float], float]
    boundary: BoundaryDensities
    deterministic_reservoirs: bool = False

    def channel_profile(self, params: SystemParams) -> np.ndarray:
        """u0 sampled at the channel sites, validated to lie in [0, 1]."""
        vals = np.array([float(self.u0(x / params.N)) for x in range(1, params.N + 1)])
        if not np.all(np.isfinite(vals)) or vals.min() < 0.0 or vals.max() > 1.0:
            raise ValueError("u0 must take values in [0, 1] on the channel sites")
        return vals


@dataclass
class ParticleConfig:
    """Microscopic configuration: occupation bits plus reservoir counts."""

    eta: np.ndarray
    n_minus: int
    n_plus: int

    def __post_init__(self):
        self.eta = np.ascontiguousarray(self.eta, dtype=np.uint8)
        if self.eta.ndim != 1:
            raise ValueError("eta must be one-dimensional")
        if np.any(self.eta > 1):
            raise ValueError("eta entries must be 0 or 1")

    def validate(self, params: SystemParams) -> None:
        if self.eta.shape[0] != params.N:
            raise ValueError(
                f"eta has {self.eta.shape[0]} sites, params expect {params.N}"
            )
        for name, n in (("n_minus", self.n_minus), ("n_plus", self.n_plus)):
            if not 0 <= n <= params.M:
                raise ValueError(f"{name}={n} outside [0, {params.M}]")

    def copy(self) -> "ParticleConfig":
        return ParticleConfig(self.eta.copy(), self.n_minus, self.n_plus)

    def __eq__(self, other):
        if not isinstance(other, ParticleConfig):
            return NotImplemented
        return (
            self.n_minus == other.n_minus
            and self.n_plus == other.n_plus
            and np.array_equal(self.eta, other.eta)
        )


def total_particles(config: ParticleConfig, params: Optional[SystemParams] = None) -> int:
    """Channel occupation plus both reservoir counts (the conserved quantity)."""
    if params is not None:
        config.validate(params)
    return int(config.eta.sum()) + config.n_minus + config.n_plus


def bulk_exchange_rate(config: ParticleConfig, x: int) -> float:
    """Rate of swapping sites x and x+1 (1-based); 1/2 iff the bond is discrepant."""
    N = config.eta.shape[0]
    if not 1 <= x <= N - 1:
        raise ValueError(f"bond index x must lie in [1, {N - 1}], got {x}")
    return 0.5 if config.eta[x - 1] != config.eta[x] else 0.0


def boundary_rate_left(config: ParticleConfig, params: SystemParams) -> float:
    f = config.n_minus / params.M
    if config.eta[0]:
        return 0.5 * (1.0 - f)
    return 0.5 * f


def boundary_rate_right(config: ParticleConfig, params: SystemParams) -> float:
    f = config.n_plus / params.M
    if config.eta[-1]:
        return 0.5 * (1.0 - f)
    return 0.5 * f


def apply_bulk_exchange(config: ParticleConfig, x: int) -> ParticleConfig:
    """Swap the occupations of sites x and x+1 (1-based)."""
    N = config.eta.shape[0]
    if not 1 <= x <= N - 1:
        raise ValueError(f"bond index x must lie in [1, {N - 1}], got {x}")
    out = config.copy()
    out.eta[x - 1], out.eta[x] = config.eta[x], config.eta[x - 1]
    return out


def apply_boundary_exchange_left(config: ParticleConfig, params: SystemParams) -> ParticleConfig:
    out = config.copy()
    if config.eta[0]:
        if config.n_minus >= params.M:
            raise InvalidTransitionError("deposit into a full left reservoir has rate 0")
        out.eta[0] = 0
        out.n_minus += 1
    else:
        if config.n_minus <= 0:
            raise InvalidTransitionError("withdrawal from an empty left reservoir has rate 0")
        out.eta[0] = 1
        out.n_minus -= 1
    return out


def apply_boundary_exchange_right(config: ParticleConfig, params: SystemParams) -> ParticleConfig:
    out = config.copy()
    if config.eta[-1]:
        if config.n_plus >= params.M:
            raise InvalidTransitionError("deposit into a full right reservoir has rate 0")
        out.eta[-1] = 0
        out.n_plus += 1
    else:
        if config.n_plus <= 0:
            raise InvalidTransitionError("withdrawal from an empty right reservoir has rate 0")
        out.eta[-1] = 1
        out.n_plus -= 1
    return out


def active_event_list(config: ParticleConfig, params: SystemParams) -> list[tuple[str, float]]:
    """All transitions with nonzero rate, as (event id, rate) pairs.

    Event ids are ``"bond:x"`` for the swap across (x, x+1), and
    ``"left"`` / ``"right"`` for the reservoir exchanges.  Bonds come
    first in increasing x, then left, then right.
    """
    events: list[tuple[str, float]] = []
    eta = config.eta
    for x in range(1, eta.shape[0]):
        if eta[x - 1] != eta[x]:
            events.append((f"bond:{x}", 0.5))
    r = boundary_rate_left(config, params)
    if r > 0.0:
        events.append(("left", r))
    r = boundary_rate_right(config, params)
    if r > 0.0:
        events.append(("right", r))
    return events


def mirrored(config: ParticleConfig) -> ParticleConfig:
    """Relabel sites x -> N+1-x and swap the two reservoirs."""
    return ParticleConfig(config.eta[::-1].copy(), config.n_plus, config.n_minus)


def sample_config(
    initial: InitialCondition, params: SystemParams, gen: np.random.Generator
) -> ParticleConfig:
    """Draw a microscopic configuration from the product initial law.

    Channel sites are independent Bernoulli(u0(x/N)); reservoirs are
    Binomial(M, v) or round(M v) when deterministic.  Draw order (channel
    uniforms, then n_minus, then n_plus) is fixed so that runs are
    reproducible across engine backends.
    """
    probs = initial.channel_profile(params)
    eta = (gen.random(params.N) < probs).astype(np.uint8)
    b = initial.boundary
    if initial.deterministic_reservoirs:
        n_minus = int(round(params.M * b.v_minus))
        n_plus = int(round(params.M * b.v_plus))
    else:
        n_minus = int(gen.binomial(params.M, b.v_minus))
        n_plus = int(gen.binomial(params.M, b.v_plus))
    return ParticleConfig(eta, n_minus, n_plus)
