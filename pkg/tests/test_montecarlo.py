"""Shot-based protocol simulation: randomness contract and convergence."""

import numpy as np
import pytest

from conftest import (
    E0,
    random_complete_measurement,
    random_density,
    random_ensemble,
    random_state,
)
from twotime import (
    CHUNK,
    DimensionMismatchError,
    Ensemble,
    IncompleteMeasurementError,
    Measurement,
    NormalizationError,
    ObserverPolicy,
    SimConfig,
    ValidationError,
    analytic_success_rate,
    build_tomography_set,
    density_from_ensemble,
    ensemble_from_density,
    prob_ensemble,
    prob_pure,
    pure_product,
    reconstruct,
    reversal_scenario,
    sampling_clip_tol,
    simulate,
    simulate_proportion_reversal,
)


def projective_z():
    return Measurement.detailed([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


def within_4se(freqs, target, n):
    for f, p in zip(freqs, target):
        se = np.sqrt(p * (1.0 - p) / n)
        if se == 0.0:
            if abs(f - p) > 1e-12:
                return False
        elif abs(f - p) > 4.0 * se:
            return False
    return True


# ---------------------------------------------------------------------------
# Randomness contract.

def test_same_seed_is_bit_identical():
    ens, m1, m2 = reversal_scenario()
    cfg = SimConfig(ens, ObserverPolicy((m1, m2), (0.5, 0.5)), 5000, 42)
    a = simulate(cfg)
    b = simulate(cfg)
    assert np.array_equal(a.attempted, b.attempted)
    for ca, cb in zip(a.choice_counts, b.choice_counts):
        assert np.array_equal(ca, cb)


def test_different_seeds_differ():
    ens, m1, _ = reversal_scenario()
    a = simulate(SimConfig.fixed(ens, m1, 5000, 1))
    b = simulate(SimConfig.fixed(ens, m1, 5000, 2))
    assert not np.array_equal(a.choice_counts[0], b.choice_counts[0])


def test_partition_independence():
    # Tallies must not depend on how attempts are split across workers,
    # including splits that straddle the chunk boundary.
    ens, m1, m2 = reversal_scenario()
    shots = 70_000
    assert shots > CHUNK
    cfg = SimConfig(ens, ObserverPolicy((m1, m2), (0.5, 0.5)), shots, 97)
    whole = simulate(cfg)
    for ranges in (
        [(0, 1), (1, 33333), (33333, CHUNK), (CHUNK, shots)],
        [(40_000, shots), (0, 40_000)],
        [(0, CHUNK - 1), (CHUNK - 1, CHUNK + 1), (CHUNK + 1, shots)],
    ):
        split = simulate(cfg, _ranges=ranges)
        assert np.array_equal(whole.attempted, split.attempted)
        for ca, cb in zip(whole.choice_counts, split.choice_counts):
            assert np.array_equal(ca, cb)


def test_frozen_tally_regression():
    # Pins the full randomness contract (Philox keying, chunking, the
    # order of the four uniforms).  Any change to the contract moves
    # these numbers.
    ens, m1, m2 = reversal_scenario()
    res = simulate(SimConfig(ens, ObserverPolicy((m1, m2), (0.5, 0.5)), 50, 12345))
    assert res.attempts == 50
    assert res.attempted.tolist() == [[13, 10], [12, 15]]
    assert res.choice_counts[0].tolist() == [[5, 0], [0, 2]]
    assert res.choice_counts[1].tolist() == [[5, 0], [0, 9]]
    assert res.successes == 21
    assert res.successes_for(1) == 14
    assert res.outcome_counts_for(1).tolist() == [5, 9]
    assert res.member_counts_for(1).tolist() == [5, 9]


def test_fixed_policy_accessors():
    ens, m1, _ = reversal_scenario()
    res = simulate(SimConfig.fixed(ens, m1, 2000, 5))
    assert np.array_equal(res.counts, res.outcome_counts_for(0))
    assert np.allclose(res.frequencies, res.counts / res.successes)
    ens2, m1b, m2b = reversal_scenario()
    res2 = simulate(SimConfig(ens2, ObserverPolicy((m1b, m2b), (0.5, 0.5)), 100, 5))
    with pytest.raises(ValidationError):
        res2.counts
    with pytest.raises(ValidationError):
        res2.frequencies


# ---------------------------------------------------------------------------
# Exact and statistical convergence.

def test_deterministic_scenario_is_exact():
    # "Prepare 0, post-select 0" against the z-basis projective
    # measurement: every success is outcome 0, at any shot count.
    ens = Ensemble.pure(pure_product(E0, E0))
    res = simulate(SimConfig.fixed(ens, projective_z(), 10_000, 11))
    assert res.successes > 0
    assert np.allclose(res.frequencies, [1.0, 0.0], atol=0.0)


def test_success_rate_matches_analytic():
    ens, m1, _ = reversal_scenario()
    assert analytic_success_rate(ens, m1) == pytest.approx(3.0 / 8.0, abs=1e-15)
    shots = 100_000
    res = simulate(SimConfig.fixed(ens, m1, shots, 31))
    rate = res.successes / shots
    se = np.sqrt(0.375 * 0.625 / shots)
    assert abs(rate - 0.375) <= 4.0 * se


def test_reversal_report_at_contract_scale():
    rep = simulate_proportion_reversal(shots=100_000, seed=7)
    assert rep.proportions_within_tolerance
    assert rep.proportions_differ
    assert rep.consistent
    # 2:1 under the first measurement, 1:2 under the second, 1:1 overall.
    assert np.max(np.abs(rep.expected_conditional - [[2 / 3, 1 / 3], [1 / 3, 2 / 3]])) == 0.0
    assert np.max(np.abs(rep.conditional_proportions - rep.expected_conditional)) <= 0.02
    assert abs(rep.overall_proportions[0] - 0.5) <= 0.02
    assert np.all(np.abs(rep.conditional_z) <= 4.0)
    assert abs(rep.overall_z) <= 4.0
    assert rep.separation >= rep.separation_expected / 2.0
    assert rep.discard.equalized
    kept = rep.discard.kept
    assert kept[0] == rep.discard.member_counts[0] // 2
    assert kept[1] == rep.discard.member_counts[1]


def test_random_scenarios_converge_to_the_ensemble_rule(rng):
    # Frequencies conditioned on post-selection track the mixed-state
    # probability rule within 4 binomial standard errors per outcome.
    scenarios = [(2, int(rng.integers(0, 2**63))) for _ in range(20)]
    scenarios += [(3, int(rng.integers(0, 2**63))) for _ in range(5)]
    for d, seed in scenarios:
        ens = random_ensemble(rng, d, n_members=int(rng.integers(1, 4)))
        m = random_complete_measurement(rng, d, n_outcomes=int(rng.integers(2, 5)))
        target = prob_ensemble(ens, m)
        res = simulate(SimConfig.fixed(ens, m, 30_000, seed))
        assert res.successes > 500
        assert within_4se(res.frequencies, target, res.successes)


def test_entangled_preparation_reproduces_the_pure_rule(rng):
    # A non-product coefficient array exercises the system-ancilla
    # entangled preparation and the entanglement-swapping post-selection.
    s = random_state(rng, 2)
    m = random_complete_measurement(rng, 2, n_outcomes=3)
    target = prob_pure(s, m)
    res = simulate(SimConfig.fixed(Ensemble.pure(s), m, 40_000, 1234))
    assert res.successes > 1000
    assert within_4se(res.frequencies, target, res.successes)


def test_simulated_tomography_reconstructs_the_density(rng):
    eta = random_density(rng, 2)
    ts = build_tomography_set(2)
    cfg = SimConfig.fixed(ensemble_from_density(eta), ts.measurement, 4_500_000, 20260819)
    res = simulate(cfg)
    assert res.successes >= 1_000_000
    rec = reconstruct(
        res.frequencies, 2, clip_tol=sampling_clip_tol(2, res.successes)
    )
    assert np.linalg.norm(rec.mat - eta.mat) <= 0.02


# ---------------------------------------------------------------------------
# Configuration validation.

def test_policy_validation():
    _, m1, m2 = reversal_scenario()
    with pytest.raises(ValidationError):
        ObserverPolicy((), ())
    with pytest.raises(DimensionMismatchError):
        ObserverPolicy((m1, m2), (1.0,))
    with pytest.raises(NormalizationError):
        ObserverPolicy((m1, m2), (1.0, 0.0))
    with pytest.raises(NormalizationError):
        ObserverPolicy((m1, m2), (0.7, 0.7))
    with pytest.raises(DimensionMismatchError):
        ObserverPolicy((m1, "not a measurement"), (0.5, 0.5))


def test_policy_rejects_mixed_dimensions(rng):
    m2 = random_complete_measurement(rng, 2)
    m3 = random_complete_measurement(rng, 3)
    with pytest.raises(DimensionMismatchError):
        ObserverPolicy((m2, m3), (0.5, 0.5))


def test_config_validation(rng):
    ens, m1, _ = reversal_scenario()
    with pytest.raises(ValidationError):
        SimConfig.fixed(ens, m1, 0, 1)
    with pytest.raises(ValidationError):
        SimConfig.fixed(ens, m1, 100, -1)
    with pytest.raises(ValidationError):
        SimConfig.fixed(ens, m1, 100, 2**64)
    with pytest.raises(DimensionMismatchError):
        SimConfig.fixed(random_ensemble(rng, 3), m1, 100, 1)
    with pytest.raises(DimensionMismatchError):
        SimConfig("not an ensemble", ObserverPolicy.fixed(m1), 100, 1)


def test_config_rejects_incomplete_measurements():
    ens, _, _ = reversal_scenario()
    incomplete = Measurement.detailed([np.diag([1.0, 0.0])])
    with pytest.raises(IncompleteMeasurementError):
        SimConfig.fixed(ens, incomplete, 100, 1)
