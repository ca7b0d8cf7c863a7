import math

import numpy as np
import pytest
from scipy.linalg import solve_banded

from ssep_reservoirs.model import BoundaryDensities
from ssep_reservoirs.limits import (
    LimitRegime,
    adiabatic_boundaries,
    adiabatic_profile,
    gambler_ruin_left,
    global_equilibrium,
    heat_solution,
    heat_terms_for,
    mean_exit_time,
    stationary_profile,
)


def crank_nicolson(u0, boundary, t, n_grid=2000, dt=1e-4):
    """Independent finite-difference oracle for u_t = 1/2 u_rr."""
    r = np.linspace(0.0, 1.0, n_grid + 1)
    u = np.array([u0(v) for v in r])
    u[0], u[-1] = boundary.v_minus, boundary.v_plus
    dr = 1.0 / n_grid
    lam = 0.5 * dt / (2.0 * dr * dr)
    n_in = n_grid - 1
    ab = np.zeros((3, n_in))
    ab[0, 1:] = -lam
    ab[1, :] = 1.0 + 2.0 * lam
    ab[2, :-1] = -lam
    steps = int(round(t / dt))
    for _ in range(steps):
        rhs = u[1:-1] + lam * (u[:-2] - 2.0 * u[1:-1] + u[2:])
        rhs[0] += lam * u[0]
        rhs[-1] += lam * u[-1]
        u[1:-1] = solve_banded((1, 1), ab, rhs)
    return r, u


class TestLimitRegime:
    def test_classification(self):
        assert LimitRegime.classify(0.5, 0.0).kind == "ideal_hydrodynamic"
        assert LimitRegime.classify(0.5, 0.2).kind == "ideal_stationary"
        assert LimitRegime.classify(0.5, 0.5).kind == "adiabatic"
        assert LimitRegime.classify(0.5, 0.9).kind == "global"

    def test_validate_against(self):
        LimitRegime("adiabatic", 0.5).validate_against(0.5)
        with pytest.raises(ValueError):
            LimitRegime("adiabatic", 0.3).validate_against(0.5)
        with pytest.raises(ValueError):
            LimitRegime("global", 0.2).validate_against(0.5)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            LimitRegime("subdiffusive", 0.5)
        with pytest.raises(ValueError):
            LimitRegime("global", -1.0)


class TestHeatSolution:
    def test_constant_data(self):
        b = BoundaryDensities(0.3, 0.3)
        for r in (0.0, 0.3, 0.7, 1.0):
            for t in (0.01, 1.0):
                assert abs(heat_solution(lambda x: 0.3 + 0 * x, b, r, t) - 0.3) <= 1e-10

    def test_single_sine_mode(self):
        b = BoundaryDensities(0.0, 0.0)
        for t in (0.05, 0.2, 1.0):
            decay = math.exp(-math.pi**2 * t / 2.0)
            for r in (0.1, 0.5, 0.8):
                val = heat_solution(lambda x: math.sin(math.pi * x), b, r, t)
                assert abs(val - decay * math.sin(math.pi * r)) <= 1e-8

    def test_against_finite_difference_oracle(self):
        b = BoundaryDensities(0.2, 0.7)
        u0 = lambda x: 0.2 + 0.5 * x + 0.25 * math.sin(2 * math.pi * x)
        t = 0.1
        grid, ref = crank_nicolson(u0, b, t)
        for idx in (200, 700, 1000, 1500, 1800):
            val = heat_solution(u0, b, grid[idx], t)
            assert abs(val - ref[idx]) <= 1e-6

    def test_long_time_reaches_the_line(self):
        b = BoundaryDensities(0.3, 0.8)
        u0 = lambda x: 0.3 + 0.5 * x * x
        for r in np.linspace(0.0, 1.0, 11):
            gap = heat_solution(u0, b, r, 3.0) - stationary_profile(b, r)
            assert abs(gap) <= 2e-6

    def test_boundary_values_exact(self):
        b = BoundaryDensities(0.25, 0.65)
        u0 = lambda x: 0.25 + 0.4 * x + 0.2 * math.sin(math.pi * x) * (1 - x)
        for t in (0.01, 0.5, 2.0):
            assert abs(heat_solution(u0, b, 0.0, t) - 0.25) <= 1e-12
            assert abs(heat_solution(u0, b, 1.0, t) - 0.65) <= 1e-12

    def test_satisfies_the_pde(self):
        b = BoundaryDensities(0.1, 0.6)
        u0 = lambda x: 0.1 + 0.5 * x + 0.3 * math.sin(math.pi * x)
        dr, dt, t = 1e-3, 1e-4, 0.05
        for r in (0.25, 0.5, 0.75):
            u = lambda rr, tt: heat_solution(u0, b, rr, tt)
            du_dt = (u(r, t + dt) - u(r, t - dt)) / (2 * dt)
            d2u_dr2 = (u(r + dr, t) - 2 * u(r, t) + u(r - dr, t)) / (dr * dr)
            assert abs(du_dt - 0.5 * d2u_dr2) <= 1e-4

    def test_stationary_profile_is_the_limit(self):
        b = BoundaryDensities(0.45, 0.15)
        u0 = lambda x: 0.5 + 0.4 * math.sin(3 * math.pi * x) * x * (1 - x)
        for r in np.linspace(0.0, 1.0, 9):
            gap = heat_solution(u0, b, r, 5.0) - stationary_profile(b, r)
            assert abs(gap) <= 1e-5

    def test_argument_errors(self):
        b = BoundaryDensities(0.0, 0.0)
        with pytest.raises(ValueError):
            heat_solution(lambda x: 0.5, b, 0.5, 0.0)
        with pytest.raises(ValueError):
            heat_solution(lambda x: 0.5, b, 0.5, -1.0)
        with pytest.raises(ValueError):
            heat_solution(lambda x: 0.5, b, 0.5, 1.0, terms=0)
        with pytest.raises(ValueError):
            heat_solution(lambda x: 0.5, b, 1.5, 1.0)

    def test_terms_override_matches_auto_choice_on_smooth_data(self):
        b = BoundaryDensities(0.0, 0.0)
        auto = heat_solution(lambda x: math.sin(math.pi * x), b, 0.3, 0.5)
        manual = heat_solution(lambda x: math.sin(math.pi * x), b, 0.3, 0.5,
                               terms=heat_terms_for(0.5, 1e-8))
        assert auto == manual

    def test_terms_floor(self):
        assert heat_terms_for(1000.0, 1e-8) == 8
        assert heat_terms_for(1e-3, 1e-8) > 8


class TestStationaryProfile:
    def test_values(self):
        assert stationary_profile(BoundaryDensities(0.0, 1.0), 0.5) == 0.5
        assert abs(stationary_profile(BoundaryDensities(0.2, 0.8), 0.25) - 0.35) <= 1e-15
        for r in (0.0, 0.4, 1.0):
            assert stationary_profile(BoundaryDensities(0.6, 0.6), r) == 0.6

    def test_vectorized(self):
        out = stationary_profile(BoundaryDensities(0.0, 1.0), np.array([0.0, 0.5, 1.0]))
        assert np.allclose(out, [0.0, 0.5, 1.0])

    def test_range_check(self):
        with pytest.raises(ValueError):
            stationary_profile(BoundaryDensities(0.0, 1.0), 1.2)


class TestAdiabaticBoundaries:
    def test_initial_condition(self):
        out = adiabatic_boundaries(BoundaryDensities(0.9, 0.2), 0.0)
        assert abs(out.v_minus - 0.9) <= 1e-15
        assert abs(out.v_plus - 0.2) <= 1e-15

    def test_half_life(self):
        out = adiabatic_boundaries(BoundaryDensities(1.0, 0.0), math.log(2.0))
        assert abs(out.v_minus - 0.75) <= 1e-12
        assert abs(out.v_plus - 0.25) <= 1e-12

    def test_long_time_and_sum_conservation(self):
        b0 = BoundaryDensities(0.7, 0.1)
        for t in (0.0, 0.5, 2.0, 30.0):
            out = adiabatic_boundaries(b0, t)
            assert abs(out.v_minus + out.v_plus - 0.8) <= 1e-15
        far = adiabatic_boundaries(b0, 40.0)
        assert abs(far.v_minus - 0.4) <= 1e-15
        assert abs(far.v_plus - 0.4) <= 1e-15

    def test_solves_the_relaxation_ode(self):
        b0 = BoundaryDensities(0.85, 0.15)
        dt = 1e-5
        for t in (0.1, 1.0, 3.0):
            lo = adiabatic_boundaries(b0, t - dt)
            hi = adiabatic_boundaries(b0, t + dt)
            mid = adiabatic_boundaries(b0, t)
            deriv = (hi.v_minus - lo.v_minus) / (2 * dt)
            assert abs(deriv - 0.5 * (mid.v_plus - mid.v_minus)) <= 1e-8


class TestAdiabaticProfile:
    def test_endpoints(self):
        b0 = BoundaryDensities(0.9, 0.3)
        for t in (0.2, 1.5):
            moving = adiabatic_boundaries(b0, t)
            assert adiabatic_profile(b0, 0.0, t) == moving.v_minus
            assert adiabatic_profile(b0, 1.0, t) == moving.v_plus

    def test_midpoint_pinned_at_average(self):
        assert abs(adiabatic_profile(BoundaryDensities(1.0, 0.0), 0.5, math.log(2.0)) - 0.5) <= 1e-12

    def test_flattens_at_large_time(self):
        b0 = BoundaryDensities(0.7, 0.2)
        for r in (0.0, 0.3, 1.0):
            assert abs(adiabatic_profile(b0, r, 40.0) - 0.45) <= 1e-15


class TestGlobalEquilibrium:
    def test_values(self):
        assert global_equilibrium(BoundaryDensities(0.0, 1.0)) == 0.5
        assert global_equilibrium(BoundaryDensities(0.3, 0.3)) == 0.3
        assert global_equilibrium(BoundaryDensities(0.2, 0.8)) == 0.5


class TestGamblerRuin:
    def test_values(self):
        assert abs(gambler_ruin_left(1, 9) - 0.9) <= 1e-15
        assert gambler_ruin_left(5, 9) == 0.5
        assert abs(gambler_ruin_left(9, 9) - 0.1) <= 1e-15

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            gambler_ruin_left(0, 9)
        with pytest.raises(ValueError):
            gambler_ruin_left(10, 9)


class TestMeanExitTime:
    def test_values_and_symmetry(self):
        assert mean_exit_time(5, 9) == 25.0
        assert mean_exit_time(1, 9) == 9.0
        assert mean_exit_time(3, 9) == mean_exit_time(7, 9)
