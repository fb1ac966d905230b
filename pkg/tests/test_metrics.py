# tests/test_metrics.py

import numpy as np
import pytest

from StrategicDynamics.dynamics import fitness, integrate
from StrategicDynamics.game_model import build_payoffs
from StrategicDynamics.metrics import (METRIC_COLUMNS, annotate_trajectory, expected_institution_payoff,
                                       outcome_frequencies, social_cost)


def test_baseline_final_metrics(baseline, params):
    traj = integrate((0.5, 0.5, 0.5), baseline, params, t_end=100)
    freqs = outcome_frequencies(traj.final, baseline, params)
    assert freqs.tp == pytest.approx(0.5, abs=1e-3)
    assert freqs.tn == pytest.approx(0.5, abs=1e-3)
    assert social_cost(traj.final) == pytest.approx(1.0, abs=1e-3)


def test_frequencies_at_a_corner(baseline, manipulation_proof, params):
    # all Medium, no Good user adapts, every Bad user fakes
    freqs = outcome_frequencies((1, 1, 1), baseline, params)
    assert (freqs.tp, freqs.fp, freqs.tn, freqs.fn) == (0.5, 0.5, 0.0, 0.0)
    freqs = outcome_frequencies((1, 1, 1), manipulation_proof, params)
    assert (freqs.tp, freqs.fp, freqs.tn, freqs.fn) == (0.5, 0.0, 0.5, 0.0)


def test_frequencies_partition_the_population(scenario, params, rng):
    states = rng.uniform(size=(1000, 3))
    for p in (params, params.replace(p_g=0.85)):
        freqs = outcome_frequencies(states, scenario, p)
        assert freqs.tp.shape == (1000,)
        np.testing.assert_allclose(freqs.total(), 1.0, atol=1e-12)
        for values in freqs.to_dict().values():
            assert np.all(values >= 0.0)


def test_expected_payoff_equals_mean_institution_fitness(scenario, params, rng):
    states = rng.uniform(size=(1000, 3))
    mats = build_payoffs(scenario, params)
    payoff = expected_institution_payoff(outcome_frequencies(states, scenario, params), params)
    np.testing.assert_allclose(payoff, fitness(states, mats, params).fbar_i, rtol=0, atol=1e-12)


def test_social_cost_is_the_adapting_good_share(rng):
    states = rng.uniform(size=(10, 3))
    np.testing.assert_allclose(social_cost(states), 1.0 - states[:, 1])


def test_annotate_trajectory(recourse, params):
    traj = integrate((0.85, 0.5, 0.1), recourse, params, t_end=1, record_every=10)
    frame = annotate_trajectory(traj)
    assert list(frame.columns) == ["t", "x1", "x2", "yG1", "yG2", "yB1", "yB2"] + METRIC_COLUMNS
    assert len(frame) == len(traj)
    np.testing.assert_allclose(frame[["tp", "tn", "fp", "fn"]].sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(frame["social_cost"], frame["yG2"])
