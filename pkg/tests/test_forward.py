"""Forward model: mixing, thinning, noise laws, and truncation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from channelrecon import (
    ChannelScenario,
    DetectionPlan,
    MixedDistribution,
    NoiseDistribution,
    binomial_thinning,
    forward_photocounts,
    mix_source_noise,
    mixing_matrix,
    poisson_noise,
    thermal_noise,
    thinning_matrix,
    truncation_bound,
)
from oracles import naive_forward, naive_mean, naive_mix, naive_thin

DELTA_0 = np.array([1.0])
DELTA_1 = np.array([0.0, 1.0])
DELTA_2 = np.array([0.0, 0.0, 1.0])


def probability_vectors(max_size=12):
    """Normalized probability vectors of small support."""
    return (
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=max_size)
        .filter(lambda v: sum(v) > 1e-6)
        .map(lambda v: np.asarray(v) / sum(v))
    )


def test_mix_zero_xi_appends_vacuum_entry():
    b = poisson_noise(0.84, 6)
    mixed = mix_source_noise(b, 0.0)
    np.testing.assert_array_equal(mixed.probs[:-1], b.probs)
    assert mixed.probs[-1] == 0.0


def test_mix_full_xi_shifts_up_one():
    mixed = mix_source_noise(DELTA_0, 1.0)
    np.testing.assert_array_equal(mixed.probs, DELTA_1)
    b = poisson_noise(1.3, 5)
    shifted = mix_source_noise(b, 1.0)
    np.testing.assert_array_equal(shifted.probs[1:], b.probs)
    assert shifted.probs[0] == 0.0


def test_mix_half_splits_vacuum():
    mixed = mix_source_noise(DELTA_0, 0.5)
    np.testing.assert_array_equal(mixed.probs, [0.5, 0.5])


def test_mix_reference_scale_vacuum_weight():
    b = poisson_noise(0.84, 10)
    mixed = mix_source_noise(b, 0.092)
    assert mixed.probs[0] == (1.0 - 0.092) * b.probs[0]
    assert mixed.probs[0] == pytest.approx(0.392, abs=5e-4)


def test_mix_matches_naive_and_matrix():
    rng = np.random.default_rng(3)
    for _ in range(10):
        b = rng.dirichlet(np.ones(rng.integers(1, 9)))
        xi = float(rng.uniform(0.0, 1.0))
        mixed = mix_source_noise(b, xi)
        assert mixed.probs.size == b.size + 1
        np.testing.assert_allclose(mixed.probs, naive_mix(b, xi), rtol=0, atol=1e-15)
        np.testing.assert_allclose(
            mixed.probs, mixing_matrix(xi, b.size - 1) @ b, rtol=0, atol=1e-15
        )


def test_mix_rejects_bad_inputs():
    with pytest.raises(ValueError):
        mix_source_noise(DELTA_0, -0.1)
    with pytest.raises(ValueError):
        mix_source_noise(DELTA_0, 1.1)
    with pytest.raises(ValueError):
        mix_source_noise([0.5, 0.4], 0.3)


def test_thin_single_photon_is_bernoulli():
    np.testing.assert_allclose(
        binomial_thinning(DELTA_1, 0.3), [0.7, 0.3], rtol=0, atol=1e-15
    )


def test_thin_lossless_is_identity():
    rng = np.random.default_rng(5)
    p = rng.dirichlet(np.ones(9))
    np.testing.assert_array_equal(binomial_thinning(p, 1.0), p)


def test_thin_two_photons_is_binomial():
    np.testing.assert_array_equal(binomial_thinning(DELTA_2, 0.5), [0.25, 0.5, 0.25])


def test_thin_poisson_stays_poisson():
    mu, q, cutoff = 1.3, 0.37, 40
    thinned = binomial_thinning(stats.poisson.pmf(np.arange(cutoff + 1), mu), q)
    np.testing.assert_allclose(
        thinned, stats.poisson.pmf(np.arange(cutoff + 1), q * mu), rtol=0, atol=1e-12
    )


def test_thin_matches_naive():
    rng = np.random.default_rng(11)
    for _ in range(10):
        p = rng.dirichlet(np.ones(rng.integers(1, 13)))
        q = float(rng.uniform(0.0, 1.0))
        np.testing.assert_allclose(
            binomial_thinning(p, q), naive_thin(p, q), rtol=0, atol=1e-13
        )


def test_thin_rejects_bad_q():
    for q in (-0.01, 1.01):
        with pytest.raises(ValueError):
            binomial_thinning(DELTA_1, q)


@settings(deadline=None)
@given(probability_vectors(), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_thinning_composes_multiplicatively(p, q1, q2):
    twice = binomial_thinning(binomial_thinning(p, q1), q2)
    once = binomial_thinning(p, q1 * q2)
    np.testing.assert_allclose(twice, once, rtol=0, atol=1e-12)


@settings(deadline=None)
@given(probability_vectors(), st.floats(0.0, 1.0))
def test_thinning_contracts_the_mean(p, q):
    thinned = binomial_thinning(p, q)
    assert abs(thinned.sum() - 1.0) <= 1e-9
    assert abs(naive_mean(thinned) - q * naive_mean(p)) <= 1e-10


def test_thinning_matrix_columns_are_binomial_laws():
    matrix = thinning_matrix(0.37, 8)
    np.testing.assert_allclose(matrix.sum(axis=0), np.ones(9), rtol=0, atol=1e-12)
    assert matrix.shape == (9, 9)
    truncated = thinning_matrix(0.37, 8, k_max=3)
    np.testing.assert_array_equal(truncated, matrix[:4])


def test_forward_matches_naive_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        cutoff = int(rng.integers(1, 13))
        b = NoiseDistribution(rng.dirichlet(np.ones(cutoff + 1)))
        scen = ChannelScenario(xi=float(rng.uniform(0, 1)), tau_ch=float(rng.uniform(0, 1)))
        settings_ = np.sort(rng.uniform(0.05, 1.0, size=int(rng.integers(2, 7))))
        plan = DetectionPlan(eta_tot=float(rng.uniform(0.2, 1.0)), settings=tuple(settings_))
        result = forward_photocounts(b, scen, plan)
        expected = naive_forward(b.probs, scen.xi, scen.tau_ch, plan.efficiencies)
        assert len(result) == len(plan)
        for pi, naive in zip(result, expected):
            np.testing.assert_allclose(pi.probs, naive, rtol=0, atol=1e-12)


def test_forward_is_the_composition_of_mix_and_thin():
    b = poisson_noise(0.84, 8)
    scen = ChannelScenario(xi=0.092, tau_ch=0.85)
    plan = DetectionPlan(eta_tot=0.509, settings=(0.2, 0.6, 1.0))
    mixed = mix_source_noise(b, scen.xi)
    for pi, eta in zip(forward_photocounts(b, scen, plan), plan.efficiencies):
        assert pi.eta == eta
        np.testing.assert_array_equal(pi.probs, binomial_thinning(mixed, scen.tau_ch * eta))


def test_forward_reference_scale_vacuum_dominates():
    b = poisson_noise(0.84, 10)
    scen = ChannelScenario(xi=0.092, tau_ch=0.85)
    plan = DetectionPlan(eta_tot=0.509, settings=tuple(np.linspace(0.1, 1.0, 10)))
    for pi in forward_photocounts(b, scen, plan):
        assert int(np.argmax(pi.probs)) == 0


def test_forward_empty_channel_never_clicks():
    plan = DetectionPlan(eta_tot=0.509, settings=(0.3, 0.8))
    for pi in forward_photocounts(DELTA_0, ChannelScenario(xi=0.0, tau_ch=0.85), plan):
        assert pi.probs[0] == 1.0
        np.testing.assert_array_equal(pi.probs[1:], np.zeros(pi.probs.size - 1))


def test_poisson_noise_zero_mu_is_vacuum():
    np.testing.assert_array_equal(poisson_noise(0.0, 5).probs, [1, 0, 0, 0, 0, 0])


def test_poisson_noise_matches_series():
    b = poisson_noise(1.0, 10)
    assert b.probs[0] == pytest.approx(math.exp(-1.0), abs=1e-7)
    assert b.probs[0] == pytest.approx(0.367879, abs=1e-6)
    assert b.tail_mass < 1e-7
    np.testing.assert_allclose(
        b.probs * (1.0 - b.tail_mass), stats.poisson.pmf(np.arange(11), 1.0), rtol=1e-12
    )


def test_poisson_noise_mean_is_mu():
    b = poisson_noise(0.84, 20)
    assert naive_mean(b.probs) == pytest.approx(0.84, abs=1e-9)


def test_thermal_noise_zero_mu_is_vacuum():
    np.testing.assert_array_equal(thermal_noise(0.0, 3).probs, [1, 0, 0, 0])


def test_thermal_noise_unit_mu_is_geometric():
    b = thermal_noise(1.0, 60)
    np.testing.assert_allclose(
        b.probs[:8], 0.5 ** (np.arange(8) + 1.0), rtol=0, atol=1e-12
    )
    assert b.probs[0] == pytest.approx(0.5, abs=1e-12)


def test_thermal_noise_mean_is_mu():
    b = thermal_noise(1.78, 200)
    assert naive_mean(b.probs) == pytest.approx(1.78, abs=1e-10)


def test_noise_generators_reject_negative_mu():
    for make in (poisson_noise, thermal_noise):
        with pytest.raises(ValueError):
            make(-0.1, 5)
        with pytest.raises(ValueError):
            make(1.0, -1)


def test_truncation_bound_vacuum():
    assert truncation_bound("poisson", 0.0, 1e-6) == 0
    assert truncation_bound("thermal", 0.0, 1e-6) == 0


def test_truncation_bound_poisson_matches_survival_function():
    for mu, eps in ((2.0, 1e-6), (0.84, 1e-8), (0.45, 1e-4)):
        bound = truncation_bound("poisson", mu, eps)
        assert stats.poisson.sf(bound, mu) < eps
        if bound > 0:
            assert stats.poisson.sf(bound - 1, mu) >= eps


def test_truncation_bound_thermal_matches_geometric_tail():
    for mu, eps in ((1.78, 1e-8), (1.0, 1e-6), (2.0, 1e-8)):
        bound = truncation_bound("thermal", mu, eps)
        ratio = mu / (1.0 + mu)
        assert ratio ** (bound + 1) < eps
        if bound > 0:
            assert ratio**bound >= eps


def test_truncation_bound_monotonic():
    bounds = [truncation_bound("poisson", mu, 1e-6) for mu in (0.1, 0.5, 1.0, 2.0, 5.0)]
    assert bounds == sorted(bounds)
    by_eps = [truncation_bound("thermal", 1.78, eps) for eps in (1e-2, 1e-4, 1e-8, 1e-12)]
    assert by_eps == sorted(by_eps)


def test_truncation_bound_rejections():
    with pytest.raises(ValueError):
        truncation_bound("uniform", 1.0, 1e-6)
    with pytest.raises(ValueError):
        truncation_bound("poisson", -1.0, 1e-6)
    for eps in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            truncation_bound("poisson", 1.0, eps)


def test_distributions_validate_and_freeze():
    with pytest.raises(ValueError):
        NoiseDistribution([0.5, 0.4])
    with pytest.raises(ValueError):
        NoiseDistribution([1.5, -0.5])
    with pytest.raises(ValueError):
        NoiseDistribution([])
    with pytest.raises(ValueError):
        MixedDistribution([np.nan, 1.0])
    dist = NoiseDistribution([0.25, 0.75])
    assert dist.cutoff == 1
    with pytest.raises(ValueError):
        dist.probs[0] = 0.9


def test_detection_plan_efficiencies_and_guards():
    plan = DetectionPlan(eta_tot=0.5, settings=(0.2, 0.8), eta_det=0.625, gamma=0.8)
    np.testing.assert_allclose(plan.efficiencies, [0.1, 0.4], rtol=0, atol=1e-15)
    assert len(plan) == 2
    with pytest.raises(ValueError):
        DetectionPlan(eta_tot=0.5, settings=(0.2, 0.2))
    with pytest.raises(ValueError):
        DetectionPlan(eta_tot=0.5, settings=(0.0, 0.5))
    with pytest.raises(ValueError):
        DetectionPlan(eta_tot=1.5, settings=(0.5,))
    with pytest.raises(ValueError):
        DetectionPlan(eta_tot=0.5, settings=(0.2, 0.8), eta_det=0.9, gamma=0.9)
