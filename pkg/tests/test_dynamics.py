# tests/test_dynamics.py

import itertools

import numpy as np
import pytest

from StrategicDynamics.dynamics import (TRAJECTORY_COLUMNS, PopulationState, closed_form_rhs, fitness, integrate,
                                        integrate_batch, replicator_rhs, step_schedule)
from StrategicDynamics.game_model import build_payoffs, custom_scenario
from StrategicDynamics.helpers import InvalidArgumentError, StepInstabilityError


def test_population_state_complements():
    state = PopulationState(0.25, 0.5, 0.875)
    assert (state.x2, state.yg2, state.yb2) == (0.75, 0.5, 0.125)
    assert state.to_dict() == {"x1": 0.25, "yG1": 0.5, "yB1": 0.875}


@pytest.mark.parametrize("values", [(-0.1, 0.5, 0.5), (0.5, 1.2, 0.5), (0.5, 0.5, float("nan"))])
def test_population_state_rejects_points_outside_the_cube(values):
    with pytest.raises(InvalidArgumentError):
        PopulationState(*values)


def test_generic_rhs_matches_closed_form(scenario, params, rng):
    states = rng.uniform(0.0, 1.0, size=(1000, 3))
    for p in (params, params.replace(p_g=0.85, rho=20, r=5)):
        generic = replicator_rhs(states, scenario, p)
        closed = closed_form_rhs(states, scenario.name, p)
        np.testing.assert_allclose(generic, closed, rtol=0, atol=1e-12)


def test_rhs_single_state_shape(baseline, params):
    assert replicator_rhs(PopulationState(0.5, 0.5, 0.5), baseline, params).shape == (3,)
    assert replicator_rhs([0.5, 0.5, 0.5], baseline, params).shape == (3,)


def test_rhs_vanishes_at_corners(scenario, params):
    for corner in itertools.product((0.0, 1.0), repeat=3):
        np.testing.assert_array_equal(replicator_rhs(corner, scenario, params), np.zeros(3))


def test_custom_scenario_uses_the_generic_field(baseline, params, rng):
    entries = {
        "outcome.M.good.NotAdapt": "TP", "outcome.M.good.Adapt": "TP",
        "outcome.M.bad.Fake": "FP", "outcome.M.bad.Improve": "TP",
        "outcome.H.good.NotAdapt": "FN", "outcome.H.good.Adapt": "TP",
        "outcome.H.bad.Fake": "TN", "outcome.H.bad.Improve": "FN",
    }
    states = rng.uniform(size=(50, 3))
    np.testing.assert_allclose(replicator_rhs(states, custom_scenario(entries), params),
                               replicator_rhs(states, baseline, params), atol=1e-12)


def test_fitness_averages(baseline, params):
    mats = build_payoffs(baseline, params)
    prof = fitness([0.3, 0.6, 0.2], mats, params)
    assert prof.fbar_i == pytest.approx(0.3 * prof.f_i[0] + 0.7 * prof.f_i[1])
    assert prof.fbar_g == pytest.approx(0.6 * prof.f_g[0] + 0.4 * prof.f_g[1])
    assert prof.fbar_b == pytest.approx(0.2 * prof.f_b[0] + 0.8 * prof.f_b[1])
    # users only see institutions
    assert prof.f_g[0] == pytest.approx(0.3 * params.b)


def test_baseline_converges_to_high_adapt_fake(baseline, params):
    traj = integrate(PopulationState(0.5, 0.5, 0.5), baseline, params, t_end=100)
    np.testing.assert_allclose(traj.final.as_array(), [0.0, 0.0, 1.0], atol=1e-3)


def test_manipulation_proof_converges_to_medium_notadapt_improve(manipulation_proof, params):
    traj = integrate((0.5, 0.5, 0.5), manipulation_proof, params, t_end=100)
    np.testing.assert_allclose(traj.final.as_array(), [1.0, 1.0, 0.0], atol=1e-3)


def test_record_every_keeps_the_final_state(baseline, params):
    traj = integrate((0.5, 0.5, 0.5), baseline, params, t_end=1.0, dt=0.01, record_every=10)
    assert len(traj) == 11
    np.testing.assert_allclose(traj.times, np.arange(11) * 0.1, atol=1e-12)

    traj = integrate((0.5, 0.5, 0.5), baseline, params, t_end=1.0, dt=0.01, record_every=30)
    assert traj.times[-1] == 1.0
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)


def test_fractional_horizon_shortens_the_last_step(baseline, params):
    assert step_schedule(0.105, 0.01) == (10, pytest.approx(0.005))
    assert step_schedule(1.0, 0.1) == (10, 0.0)
    traj = integrate((0.5, 0.5, 0.5), baseline, params, t_end=0.105, dt=0.01)
    assert len(traj) == 12
    assert traj.times[-1] == 0.105
    assert traj.times[1] == 0.01


def test_to_frame_columns(baseline, params):
    frame = integrate((0.2, 0.4, 0.6), baseline, params, t_end=0.1).to_frame()
    assert list(frame.columns) == TRAJECTORY_COLUMNS
    np.testing.assert_allclose(frame["x1"] + frame["x2"], 1.0)
    assert frame.iloc[0]["yB1"] == 0.6


def test_window(baseline, params):
    traj = integrate((0.2, 0.4, 0.6), baseline, params, t_end=10, record_every=10)
    window = traj.window(0.25)
    assert window.times[0] == pytest.approx(7.5)
    assert window.times[-1] == 10.0
    with pytest.raises(InvalidArgumentError):
        traj.window(0.0)


def test_simplex_invariance(scenario, params, rng):
    starts = rng.uniform(0.0, 1.0, size=(1000, 3))
    batch = integrate_batch(starts, scenario, params.replace(r=5), t_end=20, record_every=100, record_from=0.0)
    assert not batch.failed.any()
    assert batch.states.shape == (len(batch.times), 1000, 3)
    assert np.all((batch.states >= 0.0) & (batch.states <= 1.0))


def test_batch_matches_single_integration(recourse, params):
    starts = np.array([[0.85, 0.5, 0.1], [0.3, 0.9, 0.4]])
    batch = integrate_batch(starts, recourse, params, t_end=5)
    for i, start in enumerate(starts):
        single = integrate(start, recourse, params, t_end=5)
        np.testing.assert_allclose(batch.final[i], single.states[-1], atol=1e-12)


def test_batch_continues_from_t_start(baseline, params):
    start = np.array([[0.5, 0.5, 0.5]])
    first = integrate_batch(start, baseline, params, t_end=2)
    second = integrate_batch(first.final, baseline, params, t_end=4, t_start=2)
    whole = integrate_batch(start, baseline, params, t_end=4)
    assert second.times[-1] == 4.0
    np.testing.assert_allclose(second.final, whole.final, atol=1e-12)


def test_large_steps_raise_instability(baseline, params):
    with pytest.raises(StepInstabilityError) as info:
        integrate((0.0, 0.5, 1.0), baseline, params, t_end=5, dt=1.0)
    assert info.value.exit_code == 3


def test_large_steps_flag_batch_rows(baseline, params):
    batch = integrate_batch([[0.0, 0.5, 1.0], [0.0, 0.0, 1.0]], baseline, params, t_end=5, dt=1.0)
    assert batch.failed.tolist() == [True, False]


@pytest.mark.parametrize("kwargs", [{"t_end": 0}, {"dt": -0.1}, {"record_every": 0}, {"record_every": 1.5}])
def test_invalid_integrator_arguments(baseline, params, kwargs):
    with pytest.raises(InvalidArgumentError):
        integrate((0.5, 0.5, 0.5), baseline, params, **kwargs)
