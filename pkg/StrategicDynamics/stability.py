"""
This module provides the local stability analysis of StrategicDynamics.

It enumerates the fixed points of a scenario (cube corners, lines of fixed
points along cube edges, the recourse center and any further rest points found
by Newton search), evaluates analytic and finite-difference Jacobians, and
classifies each point by the eigenvalues of its Jacobian.
"""
# StrategicDynamics/stability.py

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from StrategicDynamics.dynamics import (PopulationState, StateLike, vector_field, as_state_array,
                                        field_coefficients, replicator_rhs)
from StrategicDynamics.game_model import GameParameters, Scenario, corner_label
from StrategicDynamics.helpers import UnsupportedScenarioError

STABILITY_MARGIN = 1e-10
FD_STEP = 1e-6
LINE_SAMPLES = 11
NEWTON_GRID = 9
NEWTON_TOL = 1e-12
DEDUPE_TOL = 1e-6

COORDINATE_NAMES = ("x1", "yG1", "yB1")
_TAGS = (("H", "M"), ("A", "NA"), ("I", "F"))


class Classification(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    SADDLE = "saddle"
    CENTER_OR_INCONCLUSIVE = "center-or-inconclusive"


class FixedPointKind(str, Enum):
    CORNER = "corner"
    LINE_MEMBER = "line-member"
    INTERIOR = "interior"


@dataclass(frozen=True)
class FixedLine:
    """An edge of the cube made entirely of fixed points."""
    axis: int
    fixed: Tuple[Tuple[int, float], ...]

    @property
    def label(self) -> str:
        parts = []
        for k in range(3):
            if k == self.axis:
                parts.append(COORDINATE_NAMES[k])
            else:
                parts.append(_TAGS[k][int(dict(self.fixed)[k])])
        return "(" + ",".join(parts) + ")"

    def point(self, value: float) -> np.ndarray:
        s = np.empty(3)
        s[self.axis] = value
        for k, v in self.fixed:
            s[k] = v
        return s

    def distance(self, states: np.ndarray) -> np.ndarray:
        """Euclidean distance of states to the line segment."""
        s = np.asarray(states, dtype=float)
        nearest = s.copy()
        for k, v in self.fixed:
            nearest[..., k] = v
        nearest[..., self.axis] = np.clip(s[..., self.axis], 0.0, 1.0)
        return np.linalg.norm(s - nearest, axis=-1)


@dataclass(frozen=True, eq=False)
class FixedPointReport:
    location: PopulationState
    kind: FixedPointKind
    eigenvalues: np.ndarray
    classification: Classification
    label: Optional[str] = None
    rhs_norm: float = 0.0

    def to_dict(self) -> dict:
        return {
            "location": self.location.to_dict(),
            "kind": self.kind.value,
            "eigenvalues": [[float(ev.real), float(ev.imag)] for ev in self.eigenvalues],
            "classification": self.classification.value,
            "label": self.label,
        }


def pg_star(params: GameParameters) -> float:
    """Share of Good users above which the all-Medium, no-adaptation corner is stable: ``lambda / (lambda + rho)``."""
    return params.lam / (params.lam + params.rho)


def recourse_center(params: GameParameters) -> Optional[np.ndarray]:
    """
    Interior rest point of the recourse dynamics on the face ``yG1 = 1``.

    :return: ``((b + c_F - c_I) / b, 1, rho p_G / (lambda (1 - p_G)))`` when both free
        coordinates lie strictly inside (0, 1), otherwise None.
    """
    if params.p_g >= 1.0:
        return None
    x1 = (params.b + params.c_f - params.c_i) / params.b
    yb1 = params.rho * params.p_g / (params.lam * (1.0 - params.p_g))
    if 0.0 < x1 < 1.0 and 0.0 < yb1 < 1.0:
        return np.array([x1, 1.0, yb1])
    return None


def find_fixed_lines(scenario: Scenario, params: GameParameters) -> List[FixedLine]:
    """
    Edges of the cube along which the vector field vanishes identically.

    On an edge only the free coordinate can move, and its fitness difference
    depends only on the two fixed coordinates, so the edge is fixed exactly
    when that difference is zero.
    """
    coef = field_coefficients(scenario, params)
    scale = 1.0 + np.abs(coef.offset).max() + np.abs(coef.slope).max()
    lines = []
    for axis in range(3):
        others = [k for k in range(3) if k != axis]
        for values in itertools.product((0.0, 1.0), repeat=2):
            s = np.full(3, 0.5)
            s[others] = values
            delta = coef.offset[axis] + s @ coef.slope[:, axis]
            if abs(delta) <= 1e-12 * scale:
                lines.append(FixedLine(axis, tuple(zip(others, values))))
    logger.debug(f"Fixed lines of {scenario.name}: {[line.label for line in lines]}.")
    return lines


# --- Jacobians ---
def jacobian_analytic(state: StateLike, scenario: Scenario, params: GameParameters) -> np.ndarray:
    """
    Closed-form Jacobian of a built-in scenario's replicator system.

    :param state: The state at which to evaluate.
    :param scenario: One of the built-in scenarios.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :return: 3x3 matrix of partial derivatives.
    :rtype: numpy.ndarray
    :raises UnsupportedScenarioError: for custom outcome tables.
    """
    if not scenario.is_builtin:
        raise UnsupportedScenarioError(
            f"No analytic Jacobian for scenario '{scenario.name}'; use jacobian_fd instead.")
    x, yg, yb = (float(v) for v in as_state_array(state))
    rho, lam, b, c_i, c_f, p_g, r = params.rho, params.lam, params.b, params.c_i, params.c_f, params.p_g, params.r
    p_b = 1.0 - p_g
    gx, gg, gb = x * (1 - x), yg * (1 - yg), yb * (1 - yb)

    J = np.zeros((3, 3))
    J[1, 0] = b * gg
    J[1, 1] = (1 - 2 * yg) * (c_i - b * (1 - x))

    if scenario.name == "baseline":
        bracket = rho - rho * p_g * (1 - yg) - (lam + rho) * p_b * yb
        J[0] = [r * (1 - 2 * x) * bracket, r * gx * rho * p_g, -r * gx * (lam + rho) * p_b]
        J[2, 2] = (1 - 2 * yb) * (c_i - c_f)
    elif scenario.name == "manipulation_proof":
        bracket = 1 - p_g * (1 - yg) - yb * p_b
        J[0] = [r * rho * (1 - 2 * x) * bracket, r * rho * gx * p_g, -r * rho * gx * p_b]
        J[2, 0] = -b * gb
        J[2, 2] = (1 - 2 * yb) * (c_i - c_f - b * x)
    else:
        bracket = rho * p_g * yg - lam * p_b * yb
        J[0] = [r * (1 - 2 * x) * bracket, r * gx * rho * p_g, -r * gx * lam * p_b]
        J[2, 0] = b * gb
        J[2, 2] = (1 - 2 * yb) * (c_i - c_f - b * (1 - x))
    return J


def _jacobian_fd_batch(states: np.ndarray, coef, h: float) -> np.ndarray:
    s = np.atleast_2d(states)
    J = np.empty(s.shape[:-1] + (3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        near_low = s[..., j] < h
        near_high = s[..., j] > 1.0 - h
        central = (vector_field(s + e, coef) - vector_field(s - e, coef)) / (2 * h)
        # second-order one-sided stencils
        forward = (-3 * vector_field(s, coef) + 4 * vector_field(s + e, coef) - vector_field(s + 2 * e, coef)) / (2 * h)
        backward = (3 * vector_field(s, coef) - 4 * vector_field(s - e, coef) + vector_field(s - 2 * e, coef)) / (2 * h)
        column = np.where(near_low[..., None], forward, np.where(near_high[..., None], backward, central))
        J[..., :, j] = column
    return J


def jacobian_fd(state: StateLike, scenario: Scenario, params: GameParameters, h: float = FD_STEP) -> np.ndarray:
    """
    Finite-difference Jacobian of the generic vector field.

    Central differences, switching to one-sided stencils for coordinates within ``h`` of 0 or 1.

    :param state: The state at which to evaluate.
    :param scenario: Any scenario, including custom ones.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :param h: Difference step.
    :type h: float
    :return: 3x3 matrix.
    :rtype: numpy.ndarray
    """
    s = as_state_array(state).reshape(1, 3)
    return _jacobian_fd_batch(s, field_coefficients(scenario, params), h)[0]


def jacobian(state: StateLike, scenario: Scenario, params: GameParameters) -> np.ndarray:
    if scenario.is_builtin:
        return jacobian_analytic(state, scenario, params)
    return jacobian_fd(state, scenario, params)


# --- Eigenvalues ---
def characteristic_polynomial(J: np.ndarray) -> Tuple[float, float, float]:
    """Coefficients ``(c2, c1, c0)`` of ``det(lambda I - J) = lambda^3 + c2 lambda^2 + c1 lambda + c0``."""
    J = np.asarray(J, dtype=float)
    trace = J[0, 0] + J[1, 1] + J[2, 2]
    minors = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
              + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
              + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
    return -trace, minors, -float(np.linalg.det(J))


def _polish(root: complex, c2: float, c1: float, c0: float, iterations: int = 3) -> complex:
    for _ in range(iterations):
        value = ((root + c2) * root + c1) * root + c0
        slope = (3 * root + 2 * c2) * root + c1
        if abs(slope) < 1e-12:
            break
        step = value / slope
        root = root - step
        if abs(step) <= 1e-16 * (1 + abs(root)):
            break
    return root


def eigenvalues_3x3(J: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of a 3x3 real matrix from its characteristic cubic.

    Uses Cardano's formula, with the trigonometric form when all three roots
    are real, followed by a few Newton steps on the polynomial.

    :param J: 3x3 matrix with finite entries.
    :type J: numpy.ndarray
    :return: Three complex eigenvalues sorted by descending real part, then descending imaginary part.
    :rtype: numpy.ndarray
    """
    c2, c1, c0 = characteristic_polynomial(J)
    shift = -c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    scale = max(1.0, q * q, abs(p) ** 3)

    if abs(p) <= 1e-14 * max(1.0, abs(c2) ** 2, abs(c1)) and abs(q) <= 1e-14 * max(1.0, abs(c0)):
        roots = [complex(shift)] * 3
    elif disc > 1e-14 * scale or p >= 0:
        sq = np.sqrt(disc)
        u = np.cbrt(-q / 2.0 + sq)
        v = np.cbrt(-q / 2.0 - sq)
        re = -(u + v) / 2.0 + shift
        im = np.sqrt(3.0) / 2.0 * (u - v)
        roots = [complex(u + v + shift), complex(re, im), complex(re, -im)]
    else:
        m = 2.0 * np.sqrt(-p / 3.0)
        arg = np.clip(3.0 * q / (p * m), -1.0, 1.0)
        theta = np.arccos(arg) / 3.0
        roots = [complex(m * np.cos(theta - 2.0 * np.pi * k / 3.0) + shift) for k in range(3)]

    polished = []
    for root in roots:
        refined = _polish(root, c2, c1, c0)
        if root.imag == 0.0:
            refined = complex(refined.real, 0.0)
        polished.append(refined)
    # keep conjugate pairs exact
    if roots[1].imag != 0.0:
        polished[2] = polished[1].conjugate()
    return np.array(sorted(polished, key=lambda z: (-z.real, -z.imag)), dtype=complex)


def classify(eigs) -> Classification:
    """
    Linear stability class from eigenvalues.

    :param eigs: Three (complex) eigenvalues.
    :return: ``stable`` if every real part is below -1e-10, ``saddle`` if real parts of
        both signs exceed the margin, ``unstable`` if only positive ones do, else
        ``center-or-inconclusive``.
    :rtype: Classification
    """
    re = np.real(np.asarray(eigs, dtype=complex))
    if np.all(re < -STABILITY_MARGIN):
        return Classification.STABLE
    if np.any(re > STABILITY_MARGIN):
        if np.any(re < -STABILITY_MARGIN):
            return Classification.SADDLE
        return Classification.UNSTABLE
    return Classification.CENTER_OR_INCONCLUSIVE


def analyse_point(state: StateLike, scenario: Scenario, params: GameParameters,
                  kind: FixedPointKind, label: Optional[str] = None) -> FixedPointReport:
    s = as_state_array(state)
    eigs = eigenvalues_3x3(jacobian(s, scenario, params))
    rhs_norm = float(np.linalg.norm(replicator_rhs(s, scenario, params)))
    return FixedPointReport(PopulationState.from_array(np.clip(s, 0.0, 1.0)), kind, eigs,
                            classify(eigs), label, rhs_norm)


# --- Newton search ---
def newton_fixed_points(scenario: Scenario, params: GameParameters, exclude: np.ndarray = None,
                        lines: List[FixedLine] = (), grid: int = NEWTON_GRID,
                        max_iter: int = 60) -> np.ndarray:
    """
    Rest points found by Newton iteration from a regular grid of interior starts.

    Corners, members of fixed lines and points in ``exclude`` are dropped;
    the rest are deduplicated at distance 1e-6.

    :return: Array of shape ``(K, 3)`` in lexicographic order.
    :rtype: numpy.ndarray
    """
    coef = field_coefficients(scenario, params)
    ticks = np.arange(1, grid + 1) / (grid + 1)
    s = np.array(list(itertools.product(ticks, repeat=3)))

    for _ in range(max_iter):
        f = vector_field(s, coef)
        J = _jacobian_fd_batch(s, coef, FD_STEP)
        step = np.einsum("nij,nj->ni", np.linalg.pinv(J, rcond=1e-10), f)
        s = np.clip(s - step, 0.0, 1.0)
    residual = np.linalg.norm(vector_field(s, coef), axis=-1)
    s = s[residual < NEWTON_TOL]

    keep = np.ones(len(s), dtype=bool)
    corner_dist = np.linalg.norm(s - np.round(s), axis=-1)
    keep &= corner_dist > DEDUPE_TOL
    for line in lines:
        keep &= line.distance(s) > DEDUPE_TOL
    if exclude is not None and len(exclude):
        for point in np.atleast_2d(exclude):
            keep &= np.linalg.norm(s - point, axis=-1) > DEDUPE_TOL
    s = s[keep]

    found = []
    for point in s[np.lexsort(s.T[::-1])]:
        if all(np.linalg.norm(point - other) > DEDUPE_TOL for other in found):
            found.append(point)
    logger.debug(f"Newton search for {scenario.name} found {len(found)} additional rest points.")
    return np.array(found).reshape(-1, 3)


def enumerate_fixed_points(scenario: Scenario, params: GameParameters, line_samples: int = LINE_SAMPLES,
                           search: bool = True) -> List[FixedPointReport]:
    """
    All rest points of a scenario with their eigenvalues and stability class.

    The list holds the eight corners first, then samples of every edge made of
    fixed points, then the recourse center when it exists, then rest points
    found numerically.

    :param scenario: The scenario.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :param line_samples: Number of equally spaced samples per fixed line.
    :type line_samples: int
    :param search: Whether to run the Newton search for further rest points.
    :type search: bool
    :return: One report per point.
    :rtype: list
    """
    params.validate()
    reports = []
    for corner in itertools.product((0.0, 1.0), repeat=3):
        reports.append(analyse_point(corner, scenario, params, FixedPointKind.CORNER, corner_label(corner)))

    lines = find_fixed_lines(scenario, params)
    for line in lines:
        for value in np.linspace(0.0, 1.0, line_samples):
            reports.append(analyse_point(line.point(value), scenario, params, FixedPointKind.LINE_MEMBER, line.label))

    extra = []
    center = recourse_center(params) if scenario.is_builtin and scenario.name == "recourse" else None
    if center is not None:
        reports.append(analyse_point(center, scenario, params, FixedPointKind.INTERIOR, "center"))
        extra.append(center)

    if search:
        for point in newton_fixed_points(scenario, params, np.array(extra).reshape(-1, 3), lines):
            reports.append(analyse_point(point, scenario, params, FixedPointKind.INTERIOR))

    logger.info(f"Enumerated {len(reports)} fixed points for {scenario.name} "
                f"({sum(r.classification is Classification.STABLE for r in reports)} stable).")
    return reports


def find_report(reports: List[FixedPointReport], state, tol: float = 1e-9) -> Optional[FixedPointReport]:
    """First report located within ``tol`` of ``state``."""
    target = as_state_array(state)
    for report in reports:
        if np.linalg.norm(report.location.as_array() - target) <= tol:
            return report
    return None
