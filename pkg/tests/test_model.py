import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssep_reservoirs.model import (
    BoundaryDensities,
    InitialCondition,
    InvalidTransitionError,
    ParticleConfig,
    SystemParams,
    active_event_list,
    apply_boundary_exchange_left,
    apply_boundary_exchange_right,
    apply_bulk_exchange,
    boundary_rate_left,
    boundary_rate_right,
    bulk_exchange_rate,
    mirrored,
    sample_config,
    total_particles,
)


def cfg(bits, nm, npl):
    return ParticleConfig(np.array(bits, dtype=np.uint8), nm, npl)


class TestSystemParams:
    def test_m_from_scaling(self):
        assert SystemParams(N=25, alpha=0.5).M == 125
        assert SystemParams(N=50, alpha=0.5).M == 354
        assert SystemParams(N=20, alpha=1.0).M == 400

    def test_explicit_m_override(self):
        p = SystemParams(N=5, alpha=1.0, M=11)
        assert p.M == 11
        assert p.epsilon == 0.2

    def test_invalid(self):
        with pytest.raises(ValueError):
            SystemParams(N=1, alpha=0.5)
        with pytest.raises(ValueError):
            SystemParams(N=10, alpha=0.0)
        with pytest.raises(ValueError):
            SystemParams(N=10, alpha=1.0, M=0)


class TestBoundaryDensities:
    def test_range_checked(self):
        BoundaryDensities(0.0, 1.0)
        with pytest.raises(ValueError):
            BoundaryDensities(-0.1, 0.5)
        with pytest.raises(ValueError):
            BoundaryDensities(0.5, 1.2)


class TestInitialCondition:
    def test_channel_profile_values(self):
        p = SystemParams(N=4, alpha=1.0)
        ic = InitialCondition(lambda r: r, BoundaryDensities(0.0, 1.0))
        assert np.allclose(ic.channel_profile(p), [0.25, 0.5, 0.75, 1.0])

    def test_out_of_range_u0_rejected(self):
        p = SystemParams(N=4, alpha=1.0)
        ic = InitialCondition(lambda r: 1.5 * r, BoundaryDensities(0.0, 1.0))
        with pytest.raises(ValueError):
            ic.channel_profile(p)


class TestBoundaryRates:
    def test_right_examples(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        assert boundary_rate_right(cfg([0, 1], 0, 0), p) == 0.5
        assert boundary_rate_right(cfg([0, 1], 0, 10), p) == 0.0
        assert boundary_rate_right(cfg([0, 0], 0, 5), p) == 0.25

    def test_left_examples(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        assert boundary_rate_left(cfg([1, 0], 0, 0), p) == 0.5
        assert boundary_rate_left(cfg([0, 0], 10, 0), p) == 0.5
        assert boundary_rate_left(cfg([0, 0], 0, 0), p) == 0.0

    def test_rates_bounded_by_half(self):
        p = SystemParams(N=3, alpha=1.0, M=4)
        for nm in range(5):
            for bit in (0, 1):
                r = boundary_rate_left(cfg([bit, 0, 0], nm, 0), p)
                assert 0.0 <= r <= 0.5


class TestBulkExchange:
    def test_swap(self):
        assert np.array_equal(apply_bulk_exchange(cfg([1, 0], 0, 0), 1).eta, [0, 1])
        assert np.array_equal(apply_bulk_exchange(cfg([1, 1], 0, 0), 1).eta, [1, 1])
        assert np.array_equal(apply_bulk_exchange(cfg([0, 1, 0], 0, 0), 2).eta, [0, 0, 1])

    def test_rate(self):
        assert bulk_exchange_rate(cfg([1, 0, 0], 1, 1), 1) == 0.5
        assert bulk_exchange_rate(cfg([1, 0, 0], 1, 1), 2) == 0.0

    def test_bad_bond_rejected(self):
        with pytest.raises(ValueError):
            apply_bulk_exchange(cfg([1, 0], 0, 0), 2)
        with pytest.raises(ValueError):
            bulk_exchange_rate(cfg([1, 0], 0, 0), 0)


class TestBoundaryExchange:
    def test_right_deposit_and_withdraw(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        out = apply_boundary_exchange_right(cfg([0, 1], 0, 3), p)
        assert out.eta[-1] == 0 and out.n_plus == 4
        out = apply_boundary_exchange_right(cfg([0, 0], 0, 1), p)
        assert out.eta[-1] == 1 and out.n_plus == 0

    def test_right_rate_zero_transitions_rejected(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        with pytest.raises(InvalidTransitionError):
            apply_boundary_exchange_right(cfg([0, 0], 0, 0), p)
        with pytest.raises(InvalidTransitionError):
            apply_boundary_exchange_right(cfg([0, 1], 0, 10), p)

    def test_left_mirror(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        out = apply_boundary_exchange_left(cfg([1, 0], 3, 0), p)
        assert out.eta[0] == 0 and out.n_minus == 4
        out = apply_boundary_exchange_left(cfg([0, 0], 1, 0), p)
        assert out.eta[0] == 1 and out.n_minus == 0
        with pytest.raises(InvalidTransitionError):
            apply_boundary_exchange_left(cfg([0, 0], 0, 0), p)
        with pytest.raises(InvalidTransitionError):
            apply_boundary_exchange_left(cfg([1, 0], 10, 0), p)

    def test_inputs_not_mutated(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        before = cfg([0, 1], 2, 3)
        apply_boundary_exchange_right(before, p)
        apply_bulk_exchange(before, 1)
        assert before == cfg([0, 1], 2, 3)


class TestActiveEventList:
    # Easy to get wrong by intuition: an empty reservoir still accepts
    # deposits (rate 1/2 with the end site occupied) and a full one still
    # withdraws.  These lists are hand-evaluated from the rate formula.
    def test_full_channel_empty_reservoirs(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        assert active_event_list(cfg([1, 1], 0, 0), p) == [("left", 0.5), ("right", 0.5)]

    def test_absorbing_state(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        assert active_event_list(cfg([0, 0], 0, 0), p) == []

    def test_mixed_with_full_right_reservoir(self):
        p = SystemParams(N=2, alpha=1.0, M=10)
        assert active_event_list(cfg([1, 0], 0, 10), p) == [
            ("bond:1", 0.5),
            ("left", 0.5),
            ("right", 0.5),
        ]

    def test_rates_positive_and_bounded(self):
        p = SystemParams(N=6, alpha=1.0, M=3)
        events = active_event_list(cfg([1, 0, 1, 1, 0, 0], 2, 1), p)
        assert all(0.0 < r <= 0.5 for _, r in events)


@st.composite
def configs(draw):
    n = draw(st.integers(min_value=2, max_value=7))
    m = draw(st.integers(min_value=1, max_value=9))
    bits = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    nm = draw(st.integers(0, m))
    npl = draw(st.integers(0, m))
    return SystemParams(N=n, alpha=1.0, M=m), cfg(bits, nm, npl)


class TestConservationAndSymmetry:
    @settings(max_examples=200, deadline=None)
    @given(configs())
    def test_every_transition_conserves_particles(self, pc):
        params, config = pc
        before = total_particles(config, params)
        for x in range(1, params.N):
            assert total_particles(apply_bulk_exchange(config, x), params) == before
        if boundary_rate_left(config, params) > 0:
            after = apply_boundary_exchange_left(config, params)
            assert total_particles(after, params) == before
        if boundary_rate_right(config, params) > 0:
            after = apply_boundary_exchange_right(config, params)
            assert total_particles(after, params) == before

    @settings(max_examples=200, deadline=None)
    @given(configs())
    def test_mirror_commutes_with_transitions(self, pc):
        params, config = pc
        assert boundary_rate_left(config, params) == boundary_rate_right(
            mirrored(config), params
        )
        if boundary_rate_left(config, params) > 0:
            direct = mirrored(apply_boundary_exchange_left(config, params))
            routed = apply_boundary_exchange_right(mirrored(config), params)
            assert direct == routed
        for x in range(1, params.N):
            direct = mirrored(apply_bulk_exchange(config, x))
            routed = apply_bulk_exchange(mirrored(config), params.N - x)
            assert direct == routed

    def test_mirror_is_involution(self):
        c = cfg([1, 0, 0, 1, 1], 2, 7)
        assert mirrored(mirrored(c)) == c


class TestSampleConfig:
    def test_deterministic_reservoirs(self):
        p = SystemParams(N=4, alpha=1.0, M=10)
        ic = InitialCondition(lambda r: 0.0 * r, BoundaryDensities(0.3, 0.8),
                              deterministic_reservoirs=True)
        out = sample_config(ic, p, np.random.default_rng(0))
        assert out.n_minus == 3 and out.n_plus == 8
        assert out.eta.sum() == 0

    def test_extreme_profiles_are_deterministic(self):
        p = SystemParams(N=5, alpha=1.0, M=6)
        full = InitialCondition(lambda r: 1.0 + 0.0 * r, BoundaryDensities(1.0, 1.0))
        out = sample_config(full, p, np.random.default_rng(1))
        assert out.eta.sum() == 5 and out.n_minus == 6 and out.n_plus == 6

    def test_reproducible_given_generator_state(self):
        p = SystemParams(N=8, alpha=1.0, M=20)
        ic = InitialCondition(lambda r: 0.5 + 0.0 * r, BoundaryDensities(0.4, 0.6))
        a = sample_config(ic, p, np.random.default_rng(42))
        b = sample_config(ic, p, np.random.default_rng(42))
        assert a == b
