# tests/test_cycles.py

import numpy as np
import pytest

from StrategicDynamics.cycles import cycle_census, detect_cycle, section_crossings
from StrategicDynamics.dynamics import Trajectory, integrate
from StrategicDynamics.helpers import emit_report

CENTER = np.array([0.92, 1.0, 0.2])


def test_section_crossings_of_a_sine():
    times = np.linspace(0.0, 5.0, 5001)
    crossings = section_crossings(times, np.sin(2 * np.pi * times), 0.5)
    np.testing.assert_allclose(crossings, 1.0 / 12.0 + np.arange(5), atol=1e-5)


def test_recourse_trajectory_cycles_around_the_center(recourse, params):
    traj = integrate((0.85, 0.5, 0.1), recourse, params, t_end=50)
    report = detect_cycle(traj)
    assert report is not None
    assert report.n_crossings >= 3
    assert report.period_spread < 0.05
    assert report.amplitude[0] > 10 * 1e-3
    np.testing.assert_allclose(report.time_average, CENTER, atol=0.02)
    assert report.time_average[1] == pytest.approx(1.0, abs=1e-3)
    np.testing.assert_allclose(report.analytic_center, CENTER, atol=1e-12)
    assert report.center_distance < 0.02 * np.sqrt(3)
    # closed orbits on the Good-user face neither grow nor shrink
    assert report.amplitude_trend == pytest.approx(1.0, abs=0.05)


def test_cycle_period_is_near_the_linear_estimate(recourse, params):
    # small orbits around the center turn at the imaginary part of its eigenvalues
    traj = integrate((0.93, 0.99, 0.2), recourse, params, t_end=50)
    report = detect_cycle(traj)
    omega = np.sqrt(0.92 * 0.08 * 25.0 * 0.2 * 0.8 * 50.0)
    assert report.period == pytest.approx(2 * np.pi / omega, rel=0.05)


def test_period_is_stable_under_a_window_shift(recourse, params):
    traj = integrate((0.85, 0.5, 0.1), recourse, params, t_end=60)

    def between(t0, t1):
        mask = (traj.times >= t0) & (traj.times <= t1)
        return Trajectory(traj.times[mask], traj.states[mask], recourse, params)

    late = detect_cycle(between(30.0, 60.0), window_fraction=1.0)
    assert late is not None
    earlier = detect_cycle(between(30.0 - late.period, 60.0 - late.period), window_fraction=1.0)
    assert earlier is not None
    assert abs(earlier.period - late.period) < 0.05 * late.period


def test_cycle_average_does_not_depend_on_the_rate(recourse, params):
    slow = detect_cycle(integrate((0.85, 0.5, 0.1), recourse, params, t_end=50))
    fast = detect_cycle(integrate((0.85, 0.5, 0.1), recourse, params.replace(r=4), t_end=50))
    assert slow is not None and fast is not None
    np.testing.assert_allclose(slow.time_average, fast.time_average, atol=0.02)


def test_converging_trajectories_do_not_cycle(baseline, manipulation_proof, params):
    assert detect_cycle(integrate((0.5, 0.5, 0.5), baseline, params, t_end=50)) is None
    assert detect_cycle(integrate((0.5, 0.5, 0.5), manipulation_proof, params, t_end=50)) is None


def test_short_trajectories_do_not_cycle(recourse, params):
    traj = Trajectory(np.array([0.0, 1.0, 2.0]), np.full((3, 3), 0.5), recourse, params)
    assert detect_cycle(traj) is None


def test_no_analytic_center_outside_recourse(baseline, params):
    # a sine-shaped fake orbit, only the scenario matters here
    times = np.linspace(0.0, 60.0, 6001)
    states = np.stack([0.5 + 0.2 * np.sin(times), np.full_like(times, 0.5), np.full_like(times, 0.5)], axis=-1)
    report = detect_cycle(Trajectory(times, states, baseline, params))
    assert report is not None
    assert report.analytic_center is None and report.center_distance is None
    assert report.period == pytest.approx(2 * np.pi, rel=1e-3)
    assert report.time_average[0] == pytest.approx(0.5, abs=1e-3)


def test_small_census_is_reproducible(recourse, params):
    first = cycle_census(recourse, params, n_random=12, seed=7, t_end=20)
    second = cycle_census(recourse, params, n_random=12, seed=7, t_end=20, threads=2)
    np.testing.assert_array_equal(first.starts, second.starts)
    assert [r is None for r in first.reports] == [r is None for r in second.reports]
    assert emit_report(first, "json") == emit_report(second, "json")
    assert emit_report(first, "csv") == emit_report(second, "csv")
    assert first.to_dict()["seed"] == 7
    np.testing.assert_allclose(first.analytic_center, CENTER)


@pytest.mark.parametrize("p_g", [0.85, 0.95])
def test_no_cycles_above_the_threshold(recourse, params, p_g):
    # the interior rest point leaves the cube, so nothing is left to circle
    census = cycle_census(recourse, params.replace(p_g=p_g), n_random=40, seed=3)
    assert census.fraction == 0.0
    assert census.analytic_center is None


def test_empty_census(recourse, params):
    census = cycle_census(recourse, params, n_random=0)
    assert census.fraction == 0.0
    assert census.to_frame().empty


@pytest.mark.slow
def test_census_trends(recourse, params):
    base = cycle_census(recourse, params, n_random=200, seed=0)
    assert base.fraction > 0.0
    assert cycle_census(recourse, params.replace(r=4), n_random=200, seed=0).fraction >= base.fraction
    low_rho = cycle_census(recourse, params.replace(rho=2), n_random=200, seed=0)
    assert base.fraction >= low_rho.fraction
