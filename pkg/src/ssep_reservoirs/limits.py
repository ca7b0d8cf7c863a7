"""Analytic reference solutions for the four time-scale regimes.

Run the channel for a microscopic time N^(2+a') t and let N grow; the
density profile converges to a limit that depends on how a' compares
with the reservoir exponent alpha:

  a' = 0          heat equation u_t = 1/2 u_rr with Dirichlet data (v-, v+)
  0 < a' < alpha  the stationary linear profile between (v-, v+)
  a' = alpha      adiabatic regime: the line between slowly relaxing
                  boundary values v-(t), v+(t) with dv-/dt = (v+ - v-)/2
  a' > alpha      global equilibrium at the average (v- + v+)/2

These closed forms are what the harness compares simulation output
against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import BoundaryDensities

_KINDS = ("ideal_hydrodynamic", "ideal_stationary", "adiabatic", "global")


@dataclass(frozen=True)
class LimitRegime:
    """Which scaling limit a run targets, with its time exponent a'."""

    kind: str
    alpha_prime: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.alpha_prime < 0:
            raise ValueError("alpha_prime must be >= 0")

    @classmethod
    def classify(cls, alpha: float, alpha_prime: float) -> "LimitRegime":
        if alpha_prime == 0:
            kind = "ideal_hydrodynamic"
        elif alpha_prime < alpha:
            kind = "ideal_stationary"
        elif alpha_prime == alpha:
            kind = "adiabatic"
        else:
            kind = "global"
        return cls(kind, alpha_prime)

    def validate_against(self, alpha: float) -> None:
        if self != LimitRegime.classify(alpha, self.alpha_prime):
            raise ValueError(
                f"regime {self.kind!r} is inconsistent with "
                f"alpha={alpha}, alpha_prime={self.alpha_prime}"
            )


def _check_unit(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def stationary_profile(boundary: BoundaryDensities, r):
    """Linear interpolation v_- + r (v_+ - v_-) on [0, 1]."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0) or np.any(r > 1):
        raise ValueError("r must lie in [0, 1]")
    out = boundary.v_minus + r * (boundary.v_plus - boundary.v_minus)
    return float(out) if out.ndim == 0 else out


def heat_terms_for(t: float, tol: float) -> int:
    """Series length so the dropped tail of the sine expansion is below tol."""
    return max(8, int(math.ceil(math.sqrt(2.0 * math.log(1.0 / tol) / (math.pi**2 * t)))))


def _sine_coefficients(u0, boundary: BoundaryDensities, terms: int) -> np.ndarray:
    # Composite Simpson; the floor of 512 panels keeps coefficients of
    # profiles with jumps (the step preset) accurate to ~1e-3.
    panels = max(4 * terms, 512)
    nodes = np.linspace(0.0, 1.0, panels + 1)
    line = boundary.v_minus + nodes * (boundary.v_plus - boundary.v_minus)
    vals = np.array([float(u0(r)) for r in nodes]) - line
    weights = np.ones(panels + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    h = 1.0 / panels
    k = np.arange(1, terms + 1)
    modes = np.sin(np.pi * np.outer(k, nodes))
    return 2.0 * (h / 3.0) * (modes @ (weights * vals))


def heat_solution(u0, boundary: BoundaryDensities, r, t: float, *,
                  tol: float = 1e-8, terms: int | None = None):
    """Heat equation u_t = 1/2 u_rr on [0, 1] with Dirichlet data (v-, v+).

    Solved by the sine series around the stationary line; the truncation
    length is chosen from (t, tol) unless an explicit term count is
    given, and the coefficients are computed by composite Simpson
    quadrature.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(r_arr < 0) or np.any(r_arr > 1):
        raise ValueError("r must lie in [0, 1]")
    if terms is None:
        terms = heat_terms_for(t, tol)
    elif terms < 1:
        raise ValueError("terms must be >= 1")
    b = _sine_coefficients(u0, boundary, terms)
    k = np.arange(1, terms + 1)
    decay = np.exp(-(k**2) * math.pi**2 * t / 2.0)
    # multiply.outer keeps 0-d input 0-d where np.outer would flatten
    series = np.sin(np.pi * np.multiply.outer(r_arr, k)) @ (b * decay)
    out = boundary.v_minus + r_arr * (boundary.v_plus - boundary.v_minus) + series
    return float(out) if out.ndim == 0 else out


def adiabatic_boundaries(initial: BoundaryDensities, t: float) -> BoundaryDensities:
    """Closed-form boundary relaxation dv-/dt = (v+ - v-)/2 from (v0-, v0+).

    Mean (v- + v+)/2 is conserved; the gap decays like e^{-t}.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    mean = 0.5 * (initial.v_minus + initial.v_plus)
    half_gap = 0.5 * (initial.v_minus - initial.v_plus) * math.exp(-t)
    return BoundaryDensities(mean + half_gap, mean - half_gap)


def adiabatic_profile(initial: BoundaryDensities, r, t: float):
    """Quasi-static channel profile: the line between v-(t) and v+(t)."""
    return stationary_profile(adiabatic_boundaries(initial, t), r)


def global_equilibrium(initial: BoundaryDensities) -> float:
    """Flat limit density (v0- + v0+)/2."""
    return 0.5 * (initial.v_minus + initial.v_plus)


def gambler_ruin_left(x: int, n_sites: int) -> float:
    """P(simple walk from x hits 0 before N+1) = 1 - x/(N+1)."""
    if not 1 <= x <= n_sites:
        raise ValueError(f"x must lie in [1, {n_sites}], got {x}")
    return 1.0 - x / (n_sites + 1)


def mean_exit_time(x: int, n_sites: int) -> float:
    """E[first exit of {1..N} from x] = x (N+1-x) for the rate-1/2 walk."""
    if not 1 <= x <= n_sites:
        raise ValueError(f"x must lie in [1, {n_sites}], got {x}")
    return float(x * (n_sites + 1 - x))
