"""Unit tests for the physical/communication/computation model."""

import math

import numpy as np
import pytest

from pass_mec.model import (
    Allocation,
    DecodingOrder,
    PaLayout,
    Scenario,
    ZeroRateOffloadError,
    achievable_rate,
    channel_amplitudes,
    derive_constants,
    effective_gain,
    effective_gains,
    equivalent_offload_time,
    gains_ordered,
    local_delay_energy,
    offload_delay_energy,
    prefix_sum_rate,
    sic_order_satisfied,
    sinr,
    task_time,
    user_pa_distance,
)

from oracles import (
    gain_oracle,
    paper_params,
    paper_user,
    random_layout,
    random_order,
    random_scenario,
    rate_oracle,
)


class TestDerivedConstants:
    def test_eta_and_wavelength(self):
        consts = derive_constants(paper_params())
        assert consts.eta_m == pytest.approx(8.5203e-4, rel=1e-4)
        assert consts.wavelength_m == pytest.approx(1.07069e-2, rel=1e-4)

    def test_guided_wavelength(self):
        consts = derive_constants(paper_params())
        assert consts.guided_wavelength_m == pytest.approx(7.6478e-3, rel=1e-4)
        assert consts.guided_wavelength_m < consts.wavelength_m

    def test_noise_power(self):
        consts = derive_constants(paper_params())
        assert consts.noise_power_w == pytest.approx(3.9811e-15, rel=1e-4)

    def test_all_positive(self):
        consts = derive_constants(paper_params())
        assert consts.eta_m > 0 and consts.wavelength_m > 0
        assert consts.guided_wavelength_m > 0 and consts.noise_power_w > 0


class TestUserPaDistance:
    def test_vertical(self):
        u = paper_user(5.0, 0.0)
        assert user_pa_distance(u, 5.0, 3.0) == pytest.approx(3.0)

    def test_three_four_five(self):
        u = paper_user(0.0, 4.0)
        assert user_pa_distance(u, 0.0, 3.0) == pytest.approx(5.0)

    def test_generic(self):
        u = paper_user(1.0, 2.0)
        assert user_pa_distance(u, 4.0, 3.0) == pytest.approx(math.sqrt(22), rel=1e-4)
        assert user_pa_distance(u, 4.0, 3.0) == pytest.approx(4.6904, rel=1e-4)


class TestEffectiveGain:
    def test_single_pa_above_user(self):
        params = paper_params(num_antennas=1)
        sc = Scenario(params=params, users=(paper_user(5.0, 0.0),))
        gain = effective_gain(sc, PaLayout((5.0,)), 0)
        eta = derive_constants(params).eta_m
        assert gain == pytest.approx((eta / 3.0) ** 2, rel=1e-12)
        assert gain == pytest.approx(8.066e-8, rel=1e-3)

    def test_two_pa_constructive(self):
        # PAs symmetric about the user, one guided wavelength apart: equal
        # free-space phases and a full-turn waveguide phase difference add
        # coherently to four times the single-antenna gain.
        params = paper_params(num_antennas=2)
        consts = derive_constants(params)
        xu = 7.0
        layout = PaLayout((xu - consts.guided_wavelength_m / 2,
                           xu + consts.guided_wavelength_m / 2))
        assert layout.validate(params)  # lambda_g > Delta = lambda/2
        sc = Scenario(params=params, users=(paper_user(xu, 2.0),))
        r = user_pa_distance(sc.users[0], layout.x_positions_m[0], 3.0)
        gain = effective_gain(sc, layout, 0)
        assert gain == pytest.approx(4.0 * (consts.eta_m / r) ** 2, rel=1e-9)

    def test_gain_decays_with_distance(self):
        params = paper_params(num_antennas=1)
        layout = PaLayout((0.0,))
        gains = []
        for y in (1.0, 4.0, 9.0, 14.0):
            sc = Scenario(params=params, users=(paper_user(0.0, y),))
            gains.append(effective_gain(sc, layout, 0))
        assert all(a > b for a, b in zip(gains, gains[1:]))

    def test_matches_direct_sum_oracle(self, rng):
        for _ in range(100):
            sc = random_scenario(rng, int(rng.integers(1, 4)),
                                 int(rng.integers(1, 9)))
            layout = random_layout(rng, sc.params)
            for k in range(sc.num_users):
                ours = effective_gain(sc, layout, k)
                ref = gain_oracle(sc, layout, k)
                assert ours == pytest.approx(ref, rel=1e-12)

    def test_gain_upper_bound(self, rng):
        eta = derive_constants(paper_params()).eta_m
        for _ in range(50):
            sc = random_scenario(rng, 2, 4)
            layout = random_layout(rng, sc.params)
            for k, u in enumerate(sc.users):
                bound = sum(eta / user_pa_distance(u, x, 3.0)
                            for x in layout.x_positions_m) ** 2
                assert effective_gain(sc, layout, k) <= bound * (1 + 1e-12)

    def test_single_antenna_monotone_in_distance(self):
        # With one antenna and y_u = 0 the modulus has no phase structure,
        # so the gain over any grid peaks at the user's x-coordinate.
        params = paper_params(num_antennas=1)
        sc = Scenario(params=params, users=(paper_user(6.3, 0.0),))
        peak = effective_gain(sc, PaLayout((6.3,)), 0)
        for x in np.linspace(0.0, 15.0, 401):
            assert effective_gain(sc, PaLayout((float(x),)), 0) <= peak + 1e-20


def _equal_received_scenario():
    """Two users with powers chosen so each received power equals the
    aggregate noise; returns (scenario, layout, powers, order)."""
    params = paper_params(num_antennas=2)
    sc = Scenario(params=params, users=(paper_user(3.0, 4.0), paper_user(11.0, 2.0)))
    layout = PaLayout((4.0, 10.0))
    gains = effective_gains(sc, layout)
    noise = params.num_antennas * derive_constants(params).noise_power_w
    powers = [noise / gains[0], noise / gains[1]]
    # user 0 decoded last (rank 1), user 1 decoded first (rank 2)
    return sc, layout, powers, DecodingOrder((1, 2))


class TestSinrAndRate:
    def test_single_user(self):
        params = paper_params(num_antennas=1)
        sc = Scenario(params=params, users=(paper_user(5.0, 5.0),))
        layout = PaLayout((5.0,))
        g = effective_gain(sc, layout, 0)
        noise = params.num_antennas * derive_constants(params).noise_power_w
        order = DecodingOrder((1,))
        assert sinr(sc, layout, [0.01], order, 0) == pytest.approx(
            0.01 * g / noise, rel=1e-12)

    def test_zero_power_interferers_reduce_to_single_user(self):
        sc, layout, powers, order = _equal_received_scenario()
        # Zeroing the interferer's power recovers the single-user SNR.
        alone = sinr(sc, layout, [0.0, powers[1]], order, 1)
        noise = sc.params.num_antennas * derive_constants(sc.params).noise_power_w
        g1 = effective_gains(sc, layout)[1]
        assert alone == pytest.approx(powers[1] * g1 / noise, rel=1e-12)
        assert alone > sinr(sc, layout, powers, order, 1)

    def test_equal_received_powers(self):
        # Both users received at exactly the aggregate noise power: the
        # first-decoded user sees the other as interference (SINR 1/2),
        # the last-decoded user sees only noise (SINR 1).
        sc, layout, powers, order = _equal_received_scenario()
        assert sinr(sc, layout, powers, order, 1) == pytest.approx(0.5, rel=1e-9)
        assert sinr(sc, layout, powers, order, 0) == pytest.approx(1.0, rel=1e-9)

    def test_rate_values(self):
        sc, layout, powers, order = _equal_received_scenario()
        b = sc.params.bandwidth_hz
        assert achievable_rate(sc, layout, powers, order, 0) == pytest.approx(
            b, rel=1e-9)  # SINR 1 -> log2(2) = 1
        assert achievable_rate(sc, layout, powers, order, 1) == pytest.approx(
            b * math.log2(1.5), rel=1e-9)
        assert achievable_rate(sc, layout, powers, order, 1) == pytest.approx(
            5.8496e5, rel=1e-4)

    def test_zero_power_zero_rate(self):
        sc, layout, powers, order = _equal_received_scenario()
        assert achievable_rate(sc, layout, [0.0, powers[1]], order, 0) == 0.0

    def test_rate_matches_sinr_oracle(self, rng):
        for _ in range(50):
            sc = random_scenario(rng, int(rng.integers(1, 5)), 4)
            layout = random_layout(rng, sc.params)
            order = random_order(rng, sc.num_users)
            powers = rng.uniform(0, 0.01, sc.num_users)
            gains = effective_gains(sc, layout)
            for k in range(sc.num_users):
                ours = achievable_rate(sc, layout, powers, order, k)
                ref = rate_oracle(sc, gains, powers, order, k)
                assert ours == pytest.approx(ref, rel=1e-9)


class TestPrefixSumRate:
    def test_m1_equals_last_decoded_rate(self):
        sc, layout, powers, order = _equal_received_scenario()
        assert prefix_sum_rate(sc, layout, powers, order, 1) == pytest.approx(
            achievable_rate(sc, layout, powers, order, 0), rel=1e-12)

    def test_zero_powers(self):
        sc, layout, _, order = _equal_received_scenario()
        assert prefix_sum_rate(sc, layout, [0.0, 0.0], order, 2) == 0.0

    def test_telescoping(self, rng):
        for _ in range(60):
            k = int(rng.integers(1, 6))
            sc = random_scenario(rng, k, 4)
            layout = random_layout(rng, sc.params)
            order = random_order(rng, k)
            powers = rng.uniform(0, 0.01, k)
            for m in range(1, k + 1):
                total = sum(achievable_rate(sc, layout, powers, order, j)
                            for j in range(k) if order.rank[j] <= m)
                assert prefix_sum_rate(sc, layout, powers, order, m) == \
                    pytest.approx(total, rel=1e-10)


class TestDelaysAndEnergies:
    def test_offload_basic(self):
        u = paper_user(1.0, 1.0)
        t, e = offload_delay_energy(u, 1.0, 1e7, 0.01)
        assert t == pytest.approx(0.1) and e == pytest.approx(1e-3)

    def test_offload_zero_beta(self):
        u = paper_user(1.0, 1.0)
        assert offload_delay_energy(u, 0.0, 0.0, 0.01) == (0.0, 0.0)

    def test_offload_half(self):
        u = paper_user(1.0, 1.0)
        t, e = offload_delay_energy(u, 0.5, 5e6, 0.01)
        assert t == pytest.approx(0.1) and e == pytest.approx(1e-3)

    def test_offload_zero_rate_raises(self):
        u = paper_user(1.0, 1.0)
        with pytest.raises(ZeroRateOffloadError):
            offload_delay_energy(u, 0.5, 0.0, 0.01)

    def test_local_full(self):
        u = paper_user(1.0, 1.0)
        t, e = local_delay_energy(u, 0.0)
        assert t == pytest.approx(1.0) and e == pytest.approx(1.0)
        assert e > paper_params().energy_budget_j  # full-local is infeasible

    def test_local_none(self):
        u = paper_user(1.0, 1.0)
        assert local_delay_energy(u, 1.0) == (0.0, 0.0)

    def test_local_partial(self):
        u = paper_user(1.0, 1.0)
        t, e = local_delay_energy(u, 0.9)
        assert t == pytest.approx(0.1) and e == pytest.approx(0.1)

    def test_task_time(self):
        u = paper_user(1.0, 1.0)
        assert task_time(u, 0.0, 0.0, 0.0) == pytest.approx(1.0)
        assert task_time(u, 1.0, 1e7, 0.01) == pytest.approx(0.1)
        # local 0.1 s vs offload 0.09 s -> the max rules
        assert task_time(u, 0.9, 1e7, 0.01) == pytest.approx(0.1)


class TestEquivalentOffloadTime:
    def test_single_user_matches_direct_time(self):
        params = paper_params(num_antennas=1)
        sc = Scenario(params=params, users=(paper_user(5.0, 5.0),))
        layout = PaLayout((5.0,))
        order = DecodingOrder((1,))
        rate = achievable_rate(sc, layout, [0.01], order, 0)
        alloc = Allocation(beta=(0.7,), power_w=(0.01,), layout=layout,
                           order=order, delay_s=1.0)
        direct, _ = offload_delay_energy(sc.users[0], 0.7, rate, 0.01)
        assert equivalent_offload_time(sc, alloc, 1) == pytest.approx(
            direct, rel=1e-12)

    def test_zero_betas(self):
        sc, layout, powers, order = _equal_received_scenario()
        alloc = Allocation(beta=(0.0, 0.0), power_w=tuple(powers),
                           layout=layout, order=order, delay_s=1.0)
        assert equivalent_offload_time(sc, alloc, 1) == 0.0
        assert equivalent_offload_time(sc, alloc, 2) == 0.0

    def test_equalized_offload_times(self, rng):
        # Choose betas so every user's individual offload time equals a
        # common T; then the prefix form reproduces T at every depth.
        for _ in range(20):
            k = int(rng.integers(2, 5))
            sc = random_scenario(rng, k, 4)
            layout = random_layout(rng, sc.params)
            order = random_order(rng, k)
            powers = rng.uniform(0.001, 0.01, k)
            rates = [achievable_rate(sc, layout, powers, order, j)
                     for j in range(k)]
            t_common = 0.5 * min(sc.users[j].task_size_bits / rates[j]
                                 for j in range(k))
            betas = tuple(t_common * rates[j] / sc.users[j].task_size_bits
                          for j in range(k))
            alloc = Allocation(beta=betas, power_w=tuple(powers),
                               layout=layout, order=order, delay_s=1.0)
            for m in range(1, k + 1):
                assert equivalent_offload_time(sc, alloc, m) == pytest.approx(
                    t_common, rel=1e-9)


class TestSicOrdering:
    def test_single_user_always_true(self):
        assert gains_ordered([1e-9], DecodingOrder((1,)))

    def test_definition(self):
        order = DecodingOrder((2, 1))  # user 0 decoded first
        assert gains_ordered([2e-8, 1e-8], order)
        assert not gains_ordered([1e-8, 2e-8], order)

    def test_ties_allowed(self):
        assert gains_ordered([1e-8, 1e-8], DecodingOrder((2, 1)))

    def test_scale_invariance(self, rng):
        for _ in range(30):
            k = int(rng.integers(1, 5))
            gains = rng.uniform(1e-10, 1e-7, k)
            order = random_order(rng, k)
            scale = float(rng.uniform(0.1, 1e6))
            assert gains_ordered(gains, order) == \
                gains_ordered(gains * scale, order)

    def test_layout_based_check(self):
        sc, layout, _, _ = _equal_received_scenario()
        gains = effective_gains(sc, layout)
        order = DecodingOrder((1, 2)) if gains[1] >= gains[0] \
            else DecodingOrder((2, 1))
        assert sic_order_satisfied(sc, layout, order)


class TestValueObjectInvariants:
    def test_params_reject_bad_values(self):
        with pytest.raises(ValueError):
            paper_params(bandwidth_hz=0.0)
        with pytest.raises(ValueError):
            paper_params(num_antennas=0)
        with pytest.raises(ValueError):
            paper_params(num_antennas=100, min_antenna_spacing_m=1.0)

    def test_user_region_enforced(self):
        with pytest.raises(ValueError):
            Scenario(params=paper_params(), users=(paper_user(16.0, 1.0),))
        with pytest.raises(ValueError):
            Scenario(params=paper_params(), users=())

    def test_layout_validation(self):
        params = paper_params(num_antennas=2, min_antenna_spacing_m=1.0)
        assert PaLayout((1.0, 2.0)).validate(params)
        assert not PaLayout((1.0, 1.5)).validate(params)   # spacing
        assert not PaLayout((1.0, 16.0)).validate(params)  # outside
        assert not PaLayout((1.0,)).validate(params)       # wrong length

    def test_decoding_order_must_be_permutation(self):
        with pytest.raises(ValueError):
            DecodingOrder((1, 1))
        with pytest.raises(ValueError):
            DecodingOrder((0, 1))
        assert DecodingOrder.identity(3).rank == (1, 2, 3)
        assert DecodingOrder((2, 1, 3)).prefix_users(2) == [0, 1]
        assert DecodingOrder((2, 1, 3)).prefix_users(1) == [1]

    def test_allocation_boxes(self):
        order = DecodingOrder((1,))
        with pytest.raises(ValueError):
            Allocation(beta=(1.5,), power_w=(0.0,), layout=None,
                       order=order, delay_s=1.0)
        with pytest.raises(ValueError):
            Allocation(beta=(0.5,), power_w=(-1.0,), layout=None,
                       order=order, delay_s=1.0)
        with pytest.raises(ValueError):
            Allocation(beta=(0.5,), power_w=(0.0,), layout=None,
                       order=order, delay_s=0.0)

    def test_channel_amplitudes_shape(self):
        sc, layout, _, _ = _equal_received_scenario()
        v = channel_amplitudes(sc, layout)
        assert v.shape == (2,) and v.dtype == complex
        assert np.allclose(np.abs(v) ** 2, effective_gains(sc, layout))
