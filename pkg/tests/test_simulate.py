"""Monte Carlo sampling: determinism, substreams, and statistical bands."""

import numpy as np
import pytest

from channelrecon import (
    ChannelScenario,
    DetectionPlan,
    EmpiricalDataset,
    NoiseDistribution,
    SettingRecord,
    SimulationConfig,
    empirical_probabilities,
    forward_photocounts,
    poisson_noise,
    sample_photocounts,
    simulate_run,
)

REFERENCE_SCENARIO = ChannelScenario(xi=0.092, tau_ch=0.85)
REFERENCE_PLAN = DetectionPlan(eta_tot=0.509, settings=tuple(np.linspace(0.1, 1.0, 10)))


def reference_config(shots=100_000, seed=0):
    return SimulationConfig(
        scenario=REFERENCE_SCENARIO,
        noise=poisson_noise(0.84, 12),
        plan=REFERENCE_PLAN,
        shots_per_setting=shots,
        seed=seed,
    )


def test_sample_degenerate_law_lands_in_one_bin():
    hist = sample_photocounts([1.0, 0.0, 0.0], 100, np.random.default_rng(1))
    np.testing.assert_array_equal(hist, [100, 0, 0])


def test_sample_is_deterministic_for_a_given_state():
    one = sample_photocounts([0.4, 0.6], 5000, np.random.default_rng(7))
    two = sample_photocounts([0.4, 0.6], 5000, np.random.default_rng(7))
    np.testing.assert_array_equal(one, two)


def test_sample_frequency_within_binomial_band():
    hist = sample_photocounts([0.7, 0.3], 1_000_000, np.random.default_rng(0))
    assert hist.sum() == 1_000_000
    assert abs(hist[1] / 1e6 - 0.3) <= 0.002


def test_sample_rejects_bad_shot_counts():
    with pytest.raises(ValueError):
        sample_photocounts([0.5, 0.5], 0, np.random.default_rng(0))


def test_empirical_probabilities_basics():
    np.testing.assert_array_equal(empirical_probabilities((70, 30), 100), [0.7, 0.3])
    assert empirical_probabilities((70, 30), 100).sum() == 1.0
    np.testing.assert_array_equal(empirical_probabilities((50, 0, 0), 50), [1.0, 0.0, 0.0])


def test_empirical_probabilities_of_samples_are_normalized():
    hist = sample_photocounts([0.2, 0.5, 0.2, 0.1], 997, np.random.default_rng(3))
    probs = empirical_probabilities(hist, 997)
    assert abs(probs.sum() - 1.0) <= 1e-12


def test_empirical_probabilities_rejections():
    with pytest.raises(ValueError):
        empirical_probabilities((70, 29), 100)
    with pytest.raises(ValueError):
        empirical_probabilities((-1, 101), 100)
    with pytest.raises(ValueError):
        empirical_probabilities((), 1)
    with pytest.raises(ValueError):
        empirical_probabilities((5,), 0)


def test_simulate_silent_channel_only_sees_vacuum():
    config = SimulationConfig(
        scenario=ChannelScenario(xi=0.0, tau_ch=0.85),
        noise=NoiseDistribution([1.0]),
        plan=DetectionPlan(eta_tot=0.509, settings=(0.3, 0.8)),
        shots_per_setting=1000,
        seed=4,
    )
    for record in simulate_run(config).records:
        assert record.counts[0] == 1000
        assert sum(record.counts[1:]) == 0


def test_simulate_is_reproducible():
    assert simulate_run(reference_config(shots=2000)) == simulate_run(reference_config(shots=2000))


def test_simulate_records_provenance():
    dataset = simulate_run(reference_config(shots=100, seed=42))
    assert dataset.seed == 42
    assert dataset.rng == "numpy-pcg64"
    assert len(dataset) == 10
    np.testing.assert_allclose(
        dataset.efficiencies, REFERENCE_PLAN.efficiencies, rtol=0, atol=1e-15
    )


def test_simulate_histograms_do_not_depend_on_setting_order():
    noise = poisson_noise(0.84, 12)
    forward = DetectionPlan(eta_tot=0.509, settings=(0.2, 0.5, 0.9))
    backward = DetectionPlan(eta_tot=0.509, settings=(0.9, 0.2, 0.5))
    kwargs = dict(scenario=REFERENCE_SCENARIO, noise=noise, shots_per_setting=3000, seed=11)
    one = simulate_run(SimulationConfig(plan=forward, **kwargs))
    two = simulate_run(SimulationConfig(plan=backward, **kwargs))
    by_eta = {record.eta: record.counts for record in two.records}
    for record in one.records:
        assert by_eta[record.eta] == record.counts


def test_simulate_seed_changes_histograms():
    one = simulate_run(reference_config(shots=5000, seed=0))
    two = simulate_run(reference_config(shots=5000, seed=1))
    assert any(a.counts != b.counts for a, b in zip(one.records, two.records))


def test_simulate_reference_scale_matches_exact_law_within_5_sigma():
    shots = 1_000_000
    config = reference_config(shots=shots, seed=20)
    dataset = simulate_run(config)
    exact = forward_photocounts(config.noise, config.scenario, config.plan)
    for record, pi in zip(dataset.records, exact):
        freq = record.frequencies
        for k, prob in enumerate(pi.probs):
            sigma = np.sqrt(prob * (1.0 - prob) / shots)
            assert abs(freq[k] - prob) <= 5.0 * sigma + 3.0 / shots


def test_simulation_config_guards():
    good = dict(
        scenario=REFERENCE_SCENARIO,
        noise=poisson_noise(0.5, 6),
        plan=REFERENCE_PLAN,
        shots_per_setting=10,
        seed=0,
    )
    SimulationConfig(**good)
    with pytest.raises(ValueError):
        SimulationConfig(**{**good, "plan": DetectionPlan(eta_tot=0.5, settings=(0.7,))})
    with pytest.raises(ValueError):
        SimulationConfig(**{**good, "shots_per_setting": 0})
    with pytest.raises(ValueError):
        SimulationConfig(**{**good, "seed": -1})
    with pytest.raises(ValueError):
        SimulationConfig(**{**good, "seed": 2**64})


def test_setting_record_checks_totals():
    record = SettingRecord(eta=0.4, counts=(9, 1), shots=10)
    np.testing.assert_array_equal(record.frequencies, [0.9, 0.1])
    with pytest.raises(ValueError):
        SettingRecord(eta=0.4, counts=(9, 2), shots=10)
    with pytest.raises(ValueError):
        SettingRecord(eta=0.4, counts=(-1, 11), shots=10)
    with pytest.raises(ValueError):
        SettingRecord(eta=1.2, counts=(10,), shots=10)


def test_dataset_shape_helpers():
    records = (
        SettingRecord(eta=0.2, counts=(4, 1), shots=5),
        SettingRecord(eta=0.9, counts=(2, 2, 1), shots=5),
    )
    dataset = EmpiricalDataset(records=records, seed=3)
    assert dataset.kmax == 2
    assert len(dataset) == 2
    np.testing.assert_array_equal(dataset.efficiencies, [0.2, 0.9])
    with pytest.raises(ValueError):
        EmpiricalDataset(records=())
