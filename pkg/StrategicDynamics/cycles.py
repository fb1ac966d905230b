"""
This module provides periodic orbit detection for StrategicDynamics.

Cycles are recognised from upward crossings of the plane ``x1 = mean(x1)``
over the late part of a trajectory. Detection is a heuristic: it reports
regular recurrence with a visible amplitude, not orbit closure.
"""
# StrategicDynamics/cycles.py

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from StrategicDynamics.dynamics import DEFAULT_DT, Trajectory, integrate_batch
from StrategicDynamics.game_model import GameParameters, Scenario
from StrategicDynamics.helpers import run_chunks
from StrategicDynamics.stability import recourse_center

DEFAULT_WINDOW = 0.5
PERIOD_SPREAD_MAX = 0.05
MIN_CROSSINGS = 3
DEFAULT_TOL_CORNER = 1e-3
CENSUS_T_END = 50.0
CENSUS_SIZE = 200
CHUNK_SIZE = 50


@dataclass(eq=False)
class CycleReport:
    period: float
    time_average: np.ndarray
    amplitude: np.ndarray
    n_crossings: int
    period_spread: float
    amplitude_trend: float
    analytic_center: Optional[np.ndarray] = None
    center_distance: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "time_average": self.time_average,
            "amplitude": self.amplitude,
            "n_crossings": self.n_crossings,
            "period_spread": self.period_spread,
            "amplitude_trend": self.amplitude_trend,
            "analytic_center": self.analytic_center,
            "center_distance": self.center_distance,
        }


def section_crossings(times: np.ndarray, values: np.ndarray, section: float) -> np.ndarray:
    """Interpolated times at which ``values`` crosses ``section`` upwards."""
    idx = np.nonzero((values[:-1] < section) & (values[1:] >= section))[0]
    frac = (section - values[idx]) / (values[idx + 1] - values[idx])
    return times[idx] + frac * (times[idx + 1] - times[idx])


def _interpolate(times: np.ndarray, states: np.ndarray, t: float) -> np.ndarray:
    return np.array([np.interp(t, times, states[:, k]) for k in range(states.shape[1])])


def _segment(times: np.ndarray, states: np.ndarray, t0: float, t1: float):
    inside = (times > t0) & (times < t1)
    seg_t = np.concatenate([[t0], times[inside], [t1]])
    seg_s = np.vstack([_interpolate(times, states, t0), states[inside], _interpolate(times, states, t1)])
    return seg_t, seg_s


def _time_mean(seg_t: np.ndarray, seg_s: np.ndarray) -> np.ndarray:
    widths = np.diff(seg_t)[:, None]
    return np.sum(0.5 * (seg_s[1:] + seg_s[:-1]) * widths, axis=0) / (seg_t[-1] - seg_t[0])


def detect_cycle(traj: Trajectory, window_fraction: float = DEFAULT_WINDOW,
                 tol_corner: float = DEFAULT_TOL_CORNER) -> Optional[CycleReport]:
    """
    Look for a periodic orbit in the final part of a trajectory.

    A cycle needs at least three upward crossings of the section, periods
    that differ by less than 5 % and an ``x1`` amplitude above ``10 * tol_corner``.

    :param traj: A recorded trajectory.
    :type traj: Trajectory
    :param window_fraction: Share of the time span, counted from the end, that is analysed.
    :type window_fraction: float
    :param tol_corner: Corner tolerance; sets the amplitude floor.
    :type tol_corner: float
    :return: The cycle report, or None when the criteria fail.
    :rtype: CycleReport
    """
    window = traj.window(window_fraction)
    times, states = window.times, window.states
    if len(times) < 4:
        return None

    x1 = states[:, 0]
    crossings = section_crossings(times, x1, float(np.mean(x1)))
    if len(crossings) < MIN_CROSSINGS:
        return None
    periods = np.diff(crossings)
    period = float(np.mean(periods))
    spread = float((periods.max() - periods.min()) / period)
    if spread >= PERIOD_SPREAD_MAX:
        return None

    seg_t, seg_s = _segment(times, states, crossings[0], crossings[-1])
    amplitude = seg_s.max(axis=0) - seg_s.min(axis=0)
    if amplitude[0] <= 10 * tol_corner:
        return None

    first_t, first_s = _segment(times, states, crossings[0], crossings[1])
    last_t, last_s = _segment(times, states, crossings[-2], crossings[-1])
    early = np.ptp(first_s[:, 0])
    trend = float(np.ptp(last_s[:, 0]) / early) if early > 0 else 1.0

    average = np.clip(_time_mean(seg_t, seg_s), 0.0, 1.0)
    center = None
    if traj.scenario.is_builtin and traj.scenario.name == "recourse":
        center = recourse_center(traj.params)
    distance = float(np.linalg.norm(average - center)) if center is not None else None
    return CycleReport(period, average, amplitude, len(crossings), spread, trend, center, distance)


@dataclass(eq=False)
class CycleCensus:
    scenario: str
    params: GameParameters
    seed: int
    t_end: float
    starts: np.ndarray
    reports: List[Optional[CycleReport]] = field(default_factory=list)

    @property
    def n_random(self) -> int:
        return len(self.starts)

    @property
    def cycles(self) -> List[CycleReport]:
        return [report for report in self.reports if report is not None]

    @property
    def fraction(self) -> float:
        return len(self.cycles) / self.n_random if self.n_random else 0.0

    @property
    def analytic_center(self) -> Optional[np.ndarray]:
        return recourse_center(self.params) if self.scenario == "recourse" else None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "params": self.params.to_dict(),
            "seed": self.seed,
            "t_end": self.t_end,
            "n_random": self.n_random,
            "fraction": self.fraction,
            "analytic_center": self.analytic_center,
            "cycles": [dict(start=start, **report.to_dict())
                       for start, report in zip(self.starts, self.reports) if report is not None],
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for start, report in zip(self.starts, self.reports):
            row = {"x1_0": start[0], "yG1_0": start[1], "yB1_0": start[2], "cycle": report is not None}
            if report is not None:
                row.update(period=report.period, avg_x1=report.time_average[0], avg_yG1=report.time_average[1],
                           avg_yB1=report.time_average[2], center_distance=report.center_distance)
            rows.append(row)
        columns = ["x1_0", "yG1_0", "yB1_0", "cycle", "period", "avg_x1", "avg_yG1", "avg_yB1", "center_distance"]
        return pd.DataFrame(rows, columns=columns)


def cycle_census(scenario: Scenario, params: GameParameters, n_random: int = CENSUS_SIZE, seed: int = 0,
                 t_end: float = CENSUS_T_END, dt: float = DEFAULT_DT, window_fraction: float = DEFAULT_WINDOW,
                 tol_corner: float = DEFAULT_TOL_CORNER, threads: int = 1) -> CycleCensus:
    """
    Share of random initial conditions whose trajectories settle on a cycle.

    :param scenario: The scenario, normally recourse.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :param n_random: Number of uniformly drawn interior starts.
    :type n_random: int
    :param seed: Seed of the random generator, recorded in the census.
    :type seed: int
    :param t_end: Integration horizon of each start.
    :type t_end: float
    :param threads: Worker threads.
    :type threads: int
    :return: Starts, per-start cycle reports and the cycle fraction.
    :rtype: CycleCensus
    """
    params.validate()
    rng = np.random.default_rng(seed)
    starts = rng.uniform(0.0, 1.0, size=(n_random, 3))
    census = CycleCensus(scenario.name, params, seed, t_end, starts)
    if n_random == 0:
        return census

    record_from = t_end * (1.0 - window_fraction)

    def worker(chunk: np.ndarray):
        batch = integrate_batch(chunk, scenario, params, t_end=t_end, dt=dt, record_from=record_from)
        return [None if batch.failed[i] else detect_cycle(batch.trajectory(i), 1.0, tol_corner)
                for i in range(len(chunk))]

    chunks = [starts[i:i + CHUNK_SIZE] for i in range(0, n_random, CHUNK_SIZE)]
    for reports in run_chunks(worker, chunks, threads, desc=f"cycle census ({scenario.name})"):
        census.reports.extend(reports)
    logger.info(f"Cycle census for {scenario.name}: {len(census.cycles)}/{n_random} starts cycle "
                f"(seed={seed}, t_end={t_end}).")
    return census
