"""
This module provides basin of attraction measurements for StrategicDynamics:
endpoint classification of trajectories, basin sizes over a grid of initial
conditions and sweeps of basin sizes over rho/lambda and r.
"""
# StrategicDynamics/basins.py

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from StrategicDynamics.cycles import DEFAULT_TOL_CORNER, detect_cycle
from StrategicDynamics.dynamics import DEFAULT_DT, DEFAULT_T_END, Trajectory, integrate_batch
from StrategicDynamics.game_model import GameParameters, Scenario
from StrategicDynamics.helpers import InvalidArgumentError, StrategicDynamicsError, run_chunks
from StrategicDynamics.stability import (FixedLine, FixedPointKind, FixedPointReport, enumerate_fixed_points,
                                         find_fixed_lines)

ENDPOINT_WINDOW = 0.25
GRID_PLACEMENTS = ("centred", "inclusive")
CHUNK_SIZE = 1000
WINDOW_RECORD_EVERY = 10


class EndpointKind(str, Enum):
    CORNER = "corner"
    LINE = "line"
    INTERIOR = "interior"
    CYCLE = "cycle"
    NON_CONVERGED = "non-converged"


_KIND_ORDER = {kind: i for i, kind in enumerate(EndpointKind)}


@dataclass(frozen=True)
class EndpointClass:
    kind: EndpointKind
    label: str

    @classmethod
    def cycle(cls) -> "EndpointClass":
        return cls(EndpointKind.CYCLE, "cycle")

    @classmethod
    def non_converged(cls) -> "EndpointClass":
        return cls(EndpointKind.NON_CONVERGED, "non-converged")


def _interior_label(report: FixedPointReport) -> str:
    if report.label:
        return report.label
    return "(" + ",".join("%.6g" % v for v in report.location.as_array()) + ")"


def classify_endpoint(traj: Trajectory, known_points: Sequence[FixedPointReport],
                      tol_corner: float = DEFAULT_TOL_CORNER, lines: Sequence[FixedLine] = (),
                      window_fraction: float = ENDPOINT_WINDOW) -> EndpointClass:
    """
    Attractor reached by a trajectory.

    Corners are checked first, then other known rest points, then the fixed
    lines; if the final state is near none of them the final
    ``window_fraction`` of the trajectory is searched for a cycle.

    :param traj: The integrated trajectory.
    :type traj: Trajectory
    :param known_points: Reports from :func:`~StrategicDynamics.stability.enumerate_fixed_points`.
    :type known_points: list
    :param tol_corner: Euclidean capture distance.
    :type tol_corner: float
    :param lines: Lines of fixed points; line members in ``known_points`` are used when empty.
    :type lines: list
    :param window_fraction: Share of the trajectory searched for a cycle.
    :type window_fraction: float
    :return: The endpoint class.
    :rtype: EndpointClass
    """
    final = traj.states[-1]
    for kinds in ((FixedPointKind.CORNER,), (FixedPointKind.INTERIOR,)):
        candidates = [p for p in known_points if p.kind in kinds]
        if candidates:
            dist = np.linalg.norm(np.array([p.location.as_array() for p in candidates]) - final, axis=-1)
            best = int(np.argmin(dist))
            if dist[best] <= tol_corner:
                point = candidates[best]
                if point.kind is FixedPointKind.CORNER:
                    return EndpointClass(EndpointKind.CORNER, point.label)
                return EndpointClass(EndpointKind.INTERIOR, _interior_label(point))

    if lines:
        for line in lines:
            if line.distance(final) <= tol_corner:
                return EndpointClass(EndpointKind.LINE, line.label)
    else:
        for point in known_points:
            if point.kind is FixedPointKind.LINE_MEMBER and np.linalg.norm(point.location.as_array() - final) <= tol_corner:
                return EndpointClass(EndpointKind.LINE, point.label)

    if detect_cycle(traj, window_fraction, tol_corner) is not None:
        return EndpointClass.cycle()
    return EndpointClass.non_converged()


@dataclass(eq=False)
class BasinReport:
    scenario: str
    params: GameParameters
    n_per_axis: int
    t_end: float
    dt: float
    tol_corner: float
    endpoints: List[EndpointClass] = field(default_factory=list)
    n_failed: int = 0
    n_extended: int = 0
    placement: str = "centred"

    @property
    def total(self) -> int:
        return len(self.endpoints)

    @property
    def counts(self) -> Dict[str, int]:
        tally = {}
        for endpoint in self.endpoints:
            tally[endpoint] = tally.get(endpoint, 0) + 1
        ordered = sorted(tally, key=lambda e: (_KIND_ORDER[e.kind], e.label))
        return {endpoint.label: tally[endpoint] for endpoint in ordered}

    @property
    def kinds(self) -> Dict[str, str]:
        return {endpoint.label: endpoint.kind.value for endpoint in self.endpoints}

    @property
    def fractions(self) -> Dict[str, float]:
        return {label: count / self.total for label, count in self.counts.items()}

    def fraction(self, label: str) -> float:
        return self.fractions.get(label, 0.0)

    def to_dict(self) -> dict:
        kinds = self.kinds
        return {
            "scenario": self.scenario,
            "params": self.params.to_dict(),
            "grid": {"n_per_axis": self.n_per_axis, "placement": self.placement, "total": self.total},
            "t_end": self.t_end,
            "dt": self.dt,
            "tol_corner": self.tol_corner,
            "endpoints": [{"label": label, "kind": kinds[label], "count": count, "fraction": count / self.total}
                          for label, count in self.counts.items()],
            "n_failed": self.n_failed,
            "n_extended": self.n_extended,
        }

    def to_frame(self) -> pd.DataFrame:
        kinds = self.kinds
        return pd.DataFrame([{"endpoint": label, "kind": kinds[label], "count": count, "fraction": count / self.total}
                             for label, count in self.counts.items()],
                            columns=["endpoint", "kind", "count", "fraction"])


def grid_points(n_per_axis: int, placement: str = "centred") -> np.ndarray:
    """
    Equally spaced starts, shape ``(n**3, 3)``.

    ``centred`` puts ticks at ``(k + 0.5) / n`` and never touches a face of the
    cube; ``inclusive`` puts them at ``k / (n - 1)``, so the faces, whose points
    stay on them, are part of the grid.
    """
    if placement == "centred":
        ticks = (np.arange(n_per_axis) + 0.5) / n_per_axis
    elif placement == "inclusive":
        ticks = np.linspace(0.0, 1.0, n_per_axis)
    else:
        raise InvalidArgumentError(f"Grid placement must be one of {', '.join(GRID_PLACEMENTS)}, got '{placement}'.")
    return np.array(list(itertools.product(ticks, repeat=3)))


def _classify_chunk(chunk: np.ndarray, scenario: Scenario, params: GameParameters, known, lines,
                    t_end: float, dt: float, tol_corner: float):
    batch = integrate_batch(chunk, scenario, params, t_end=t_end, dt=dt, record_every=WINDOW_RECORD_EVERY,
                            record_from=(1.0 - ENDPOINT_WINDOW) * t_end)
    classes = [EndpointClass.non_converged()] * len(chunk)
    pending = []
    for i in range(len(chunk)):
        if batch.failed[i]:
            continue
        endpoint = classify_endpoint(batch.trajectory(i), known, tol_corner, lines, window_fraction=1.0)
        if endpoint.kind is EndpointKind.NON_CONVERGED:
            pending.append(i)
        classes[i] = endpoint

    if pending:
        # one horizon doubling before giving up
        longer = integrate_batch(batch.final[pending], scenario, params, t_end=2 * t_end, dt=dt,
                                 record_every=WINDOW_RECORD_EVERY, t_start=t_end,
                                 record_from=2 * t_end * (1.0 - ENDPOINT_WINDOW))
        for j, i in enumerate(pending):
            if not longer.failed[j]:
                classes[i] = classify_endpoint(longer.trajectory(j), known, tol_corner, lines, window_fraction=1.0)
    return classes, int(batch.failed.sum()), len(pending)


def basin_sizes(scenario: Scenario, params: GameParameters, n_per_axis: int = 20, t_end: float = DEFAULT_T_END,
                dt: float = DEFAULT_DT, tol_corner: float = DEFAULT_TOL_CORNER, threads: int = 1,
                chunk_size: int = CHUNK_SIZE, placement: str = "centred") -> BasinReport:
    """
    Share of a grid of initial conditions ending at each attractor.

    :param scenario: The scenario.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :param n_per_axis: Grid points per axis; the grid has ``n_per_axis ** 3`` points.
    :type n_per_axis: int
    :param t_end: Integration horizon, doubled once for unclassified points.
    :type t_end: float
    :param dt: Step size.
    :type dt: float
    :param tol_corner: Capture distance of rest points and lines.
    :type tol_corner: float
    :param threads: Worker threads; chunks are merged in grid order.
    :type threads: int
    :param chunk_size: Grid points integrated together.
    :type chunk_size: int
    :param placement: ``centred`` keeps every start off the faces; ``inclusive`` also integrates face points.
    :type placement: str
    :return: Endpoint counts and fractions.
    :rtype: BasinReport
    """
    if int(n_per_axis) != n_per_axis or n_per_axis < 2:
        raise InvalidArgumentError(f"n_per_axis must be an integer >= 2, got {n_per_axis}.")
    params.validate()
    known = enumerate_fixed_points(scenario, params)
    lines = find_fixed_lines(scenario, params)
    points = grid_points(int(n_per_axis), placement)
    chunks = [points[i:i + chunk_size] for i in range(0, len(points), chunk_size)]

    logger.info(f"Basin sizes for {scenario.name}: {len(points)} {placement} starts, t_end={t_end}, dt={dt}, threads={threads}.")
    results = run_chunks(
        lambda chunk: _classify_chunk(chunk, scenario, params, known, lines, t_end, dt, tol_corner),
        chunks, threads, desc=f"basins ({scenario.name})")

    report = BasinReport(scenario.name, params, int(n_per_axis), t_end, dt, tol_corner, placement=placement)
    for classes, n_failed, n_extended in results:
        report.endpoints.extend(classes)
        report.n_failed += n_failed
        report.n_extended += n_extended
    if report.n_failed:
        logger.warning(f"{report.n_failed} grid points failed to integrate and count as non-converged.")
    logger.info(f"Basin fractions for {scenario.name}: {report.fractions}")
    return report


def cycle_basin_fraction(scenario: Scenario, params: GameParameters, n_per_axis: int = 20, **kwargs) -> float:
    """Share of grid starts whose trajectories end on a cycle."""
    report = basin_sizes(scenario, params, n_per_axis, **kwargs)
    return sum(1 for e in report.endpoints if e.kind is EndpointKind.CYCLE) / report.total


@dataclass(eq=False)
class SweepResult:
    scenario: str
    base_params: GameParameters
    ratios: List[float]
    rates: List[float]
    cells: Dict[Tuple[float, float], BasinReport] = field(default_factory=dict)
    errors: Dict[Tuple[float, float], str] = field(default_factory=dict)

    def report(self, ratio: float, rate: float) -> BasinReport:
        return self.cells[(ratio, rate)]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for ratio in self.ratios:
            for rate in self.rates:
                cell = self.cells.get((ratio, rate))
                if cell is None:
                    continue
                for label, fraction in cell.fractions.items():
                    rows.append({"rho_over_lambda": ratio, "r": rate, "endpoint": label, "fraction": fraction})
        return pd.DataFrame(rows, columns=["rho_over_lambda", "r", "endpoint", "fraction"])

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "base_params": self.base_params.to_dict(),
            "cells": [{"rho_over_lambda": ratio, "r": rate, **self.cells[(ratio, rate)].to_dict()}
                      for ratio in self.ratios for rate in self.rates if (ratio, rate) in self.cells],
            "errors": [{"rho_over_lambda": ratio, "r": rate, "error": message}
                       for (ratio, rate), message in self.errors.items()],
        }


def sweep_basins(scenario: Scenario, base_params: GameParameters, rho_over_lambda_values: Sequence[float],
                 r_values: Sequence[float], n_per_axis: int = 20, **kwargs) -> SweepResult:
    """
    Basin sizes over a grid of ``rho / lambda`` ratios and institution rates.

    ``lambda`` stays at its base value and ``rho`` is set from each ratio.
    A failing cell is logged and recorded in ``errors``; the sweep goes on.

    :param scenario: The scenario.
    :type scenario: Scenario
    :param base_params: Parameters shared by every cell.
    :type base_params: GameParameters
    :param rho_over_lambda_values: Ratios to visit.
    :type rho_over_lambda_values: list
    :param r_values: Rates to visit.
    :type r_values: list
    :param n_per_axis: Grid points per axis of every basin run.
    :type n_per_axis: int
    :return: One basin report per cell.
    :rtype: SweepResult
    """
    ratios, rates = [float(v) for v in rho_over_lambda_values], [float(v) for v in r_values]
    result = SweepResult(scenario.name, base_params, ratios, rates)
    cells = [(ratio, rate) for ratio in ratios for rate in rates]

    def run_cell(cell):
        ratio, rate = cell
        try:
            params = base_params.replace(rho=ratio * base_params.lam, r=rate)
            return basin_sizes(scenario, params, n_per_axis, **kwargs)
        except StrategicDynamicsError as e:
            logger.warning(f"Sweep cell rho/lambda={ratio}, r={rate} failed: {e}")
            return e

    for cell, outcome in zip(cells, run_chunks(run_cell, cells, 1, desc=f"sweep ({scenario.name})")):
        if isinstance(outcome, BasinReport):
            result.cells[cell] = outcome
        else:
            result.errors[cell] = str(outcome)
    logger.info(f"Sweep for {scenario.name} finished: {len(result.cells)} cells, {len(result.errors)} failures.")
    return result
