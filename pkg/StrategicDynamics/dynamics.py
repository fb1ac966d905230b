"""
This module provides the replicator dynamics of StrategicDynamics: fitness of
every strategy, the vector field of the three coupled populations and a
fixed-step Runge-Kutta integrator for single and batched trajectories.
"""
# StrategicDynamics/dynamics.py

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
import pandas as pd
from loguru import logger

from StrategicDynamics.game_model import GameParameters, PayoffMatrices, Scenario, build_payoffs
from StrategicDynamics.helpers import InvalidArgumentError, StepInstabilityError

CLAMP_TOL = 1e-12
DEFAULT_T_END = 200.0
DEFAULT_DT = 0.01

STATE_COLUMNS = ["x1", "yG1", "yB1"]
TRAJECTORY_COLUMNS = ["t", "x1", "x2", "yG1", "yG2", "yB1", "yB2"]


@dataclass(frozen=True)
class PopulationState:
    """
    Shares of Medium institutions, NotAdapt Good users and Fake Bad users.

    The complementary shares are derived.
    """
    x1: float
    yg1: float
    yb1: float

    def __post_init__(self):
        for name, value in zip(STATE_COLUMNS, (self.x1, self.yg1, self.yb1)):
            if not 0.0 <= value <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}.")

    @property
    def x2(self) -> float:
        return 1.0 - self.x1

    @property
    def yg2(self) -> float:
        return 1.0 - self.yg1

    @property
    def yb2(self) -> float:
        return 1.0 - self.yb1

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.yg1, self.yb1], dtype=float)

    @classmethod
    def from_array(cls, values) -> "PopulationState":
        x1, yg1, yb1 = (float(v) for v in values)
        return cls(x1, yg1, yb1)

    def to_dict(self) -> dict:
        return dict(zip(STATE_COLUMNS, (self.x1, self.yg1, self.yb1)))


StateLike = Union[PopulationState, np.ndarray, list, tuple]


def as_state_array(state: StateLike) -> np.ndarray:
    """Return a state, or a stack of states, as a float array whose last axis has length 3."""
    if isinstance(state, PopulationState):
        return state.as_array()
    arr = np.asarray(state, dtype=float)
    if arr.shape[-1:] != (3,):
        raise InvalidArgumentError(f"States must have 3 coordinates, got shape {arr.shape}.")
    return arr


def _shares(values: np.ndarray) -> np.ndarray:
    return np.stack([values, 1.0 - values], axis=-1)


@dataclass(frozen=True, eq=False)
class FitnessProfile:
    f_i: np.ndarray
    f_g: np.ndarray
    f_b: np.ndarray
    fbar_i: np.ndarray
    fbar_g: np.ndarray
    fbar_b: np.ndarray


def fitness(state: StateLike, matrices: PayoffMatrices, params: GameParameters) -> FitnessProfile:
    """
    Fitness of every strategy and the average fitness of each population.

    Institutions meet Good users with probability ``p_G`` and Bad users otherwise;
    users meet the institution mix. Works on one state or on an ``(N, 3)`` stack.

    :param state: Population state(s).
    :param matrices: Payoff matrices of the scenario.
    :type matrices: PayoffMatrices
    :param params: Game parameters, used for ``p_G``.
    :type params: GameParameters
    :return: Per-strategy fitness vectors and their state-weighted means.
    :rtype: FitnessProfile
    """
    s = as_state_array(state)
    x, y_g, y_b = _shares(s[..., 0]), _shares(s[..., 1]), _shares(s[..., 2])
    f_i = params.p_g * (y_g @ matrices.I_G.T) + params.p_b * (y_b @ matrices.I_B.T)
    f_g = x @ matrices.U_G
    f_b = x @ matrices.U_B
    return FitnessProfile(
        f_i=f_i, f_g=f_g, f_b=f_b,
        fbar_i=np.sum(f_i * x, axis=-1),
        fbar_g=np.sum(f_g * y_g, axis=-1),
        fbar_b=np.sum(f_b * y_b, axis=-1),
    )


@dataclass(frozen=True, eq=False)
class FieldCoefficients:
    """
    Fitness differences as affine functions of the state:
    ``delta = offset + state @ slope``, one column per population.
    """
    offset: np.ndarray
    slope: np.ndarray
    rate: np.ndarray


@lru_cache(maxsize=256)
def field_coefficients(scenario: Scenario, params: GameParameters) -> FieldCoefficients:
    matrices = build_payoffs(scenario, params)

    def deltas(state):
        prof = fitness(np.asarray(state, dtype=float), matrices, params)
        return np.array([prof.f_i[0] - prof.f_i[1], prof.f_g[0] - prof.f_g[1], prof.f_b[0] - prof.f_b[1]])

    origin = deltas([0.0, 0.0, 0.0])
    slope = np.stack([deltas(unit) - origin for unit in np.eye(3)])
    # institutions only see users and users only see institutions
    slope[0, 0] = slope[1, 1] = slope[1, 2] = slope[2, 1] = slope[2, 2] = 0.0
    coefficients = FieldCoefficients(origin, slope, np.array([params.r, 1.0, 1.0]))
    logger.debug(f"Field coefficients for {scenario.name}: offset={origin.tolist()}, slope={slope.tolist()}.")
    return coefficients


def vector_field(s: np.ndarray, coef: FieldCoefficients) -> np.ndarray:
    """Replicator field of a state stack given precomputed coefficients."""
    return s * (1.0 - s) * (coef.offset + s @ coef.slope) * coef.rate


def replicator_rhs(state: StateLike, scenario: Scenario, params: GameParameters) -> np.ndarray:
    """
    Time derivative ``(dx1, dyG1, dyB1)`` of the replicator system.

    Each share grows with the fitness difference between its strategy and the
    alternative; the institution component is scaled by the rate ``r``.

    :param state: One state or an ``(N, 3)`` stack of states.
    :param scenario: The scenario.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :return: Derivatives with the same shape as ``state``.
    :rtype: numpy.ndarray
    """
    return vector_field(as_state_array(state), field_coefficients(scenario, params))


def closed_form_rhs(state: StateLike, scenario_name: str, params: GameParameters) -> np.ndarray:
    """Hand-expanded replicator systems of the three built-in scenarios."""
    s = as_state_array(state)
    x, yg, yb = s[..., 0], s[..., 1], s[..., 2]
    rho, lam, b, c_i, c_f, p_g, r = params.rho, params.lam, params.b, params.c_i, params.c_f, params.p_g, params.r
    dyg = yg * (1 - yg) * (c_i - b * (1 - x))
    if scenario_name == "baseline":
        dx = r * x * (1 - x) * (rho - rho * p_g * (1 - yg) - (lam + rho) * (1 - p_g) * yb)
        dyb = yb * (1 - yb) * (c_i - c_f)
    elif scenario_name == "manipulation_proof":
        dx = r * rho * x * (1 - x) * (1 - p_g * (1 - yg) - yb * (1 - p_g))
        dyb = yb * (1 - yb) * (c_i - c_f - b * x)
    elif scenario_name == "recourse":
        dx = r * x * (1 - x) * (rho * p_g * yg - lam * (1 - p_g) * yb)
        dyb = yb * (1 - yb) * (c_i - c_f - b * (1 - x))
    else:
        raise InvalidArgumentError(f"No closed form for scenario '{scenario_name}'.")
    return np.stack([dx, np.broadcast_to(dyg, np.shape(dx)), np.broadcast_to(dyb, np.shape(dx))], axis=-1)


@dataclass(eq=False)
class Trajectory:
    """Recorded samples of one integration run."""
    times: np.ndarray
    states: np.ndarray
    scenario: Scenario
    params: GameParameters

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> PopulationState:
        return PopulationState.from_array(self.states[-1])

    def window(self, fraction: float) -> "Trajectory":
        """The samples in the final ``fraction`` of the time span."""
        if not 0.0 < fraction <= 1.0:
            raise InvalidArgumentError(f"window fraction must lie in (0, 1], got {fraction}.")
        start = self.times[-1] - fraction * (self.times[-1] - self.times[0])
        mask = self.times >= start - 1e-12
        return Trajectory(self.times[mask], self.states[mask], self.scenario, self.params)

    def to_frame(self) -> pd.DataFrame:
        s = self.states
        return pd.DataFrame({
            "t": self.times,
            "x1": s[:, 0], "x2": 1.0 - s[:, 0],
            "yG1": s[:, 1], "yG2": 1.0 - s[:, 1],
            "yB1": s[:, 2], "yB2": 1.0 - s[:, 2],
        }, columns=TRAJECTORY_COLUMNS)


@dataclass(eq=False)
class BatchTrajectory:
    """Samples of many runs sharing one time grid; ``states`` has shape ``(T, N, 3)``."""
    times: np.ndarray
    states: np.ndarray
    failed: np.ndarray
    scenario: Scenario
    params: GameParameters

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def trajectory(self, index: int) -> Trajectory:
        return Trajectory(self.times, self.states[:, index, :], self.scenario, self.params)


def _check_integrator_args(t_end: float, dt: float, record_every: int):
    if not (np.isfinite(t_end) and t_end > 0):
        raise InvalidArgumentError(f"t_end must be positive, got {t_end}.")
    if not (np.isfinite(dt) and dt > 0):
        raise InvalidArgumentError(f"dt must be positive, got {dt}.")
    if int(record_every) != record_every or record_every < 1:
        raise InvalidArgumentError(f"record_every must be an integer >= 1, got {record_every}.")


def step_schedule(t_end: float, dt: float):
    """
    Number of full steps and the length of a shortened last step (0 when none).
    """
    ratio = t_end / dt
    n_full = int(round(ratio))
    if abs(ratio - n_full) > 1e-9 * max(1.0, ratio):
        n_full = int(np.floor(ratio))
        return n_full, t_end - n_full * dt
    return n_full, 0.0


def _rk4_step(s: np.ndarray, h: float, coef: FieldCoefficients) -> np.ndarray:
    k1 = vector_field(s, coef)
    k2 = vector_field(s + 0.5 * h * k1, coef)
    k3 = vector_field(s + 0.5 * h * k2, coef)
    k4 = vector_field(s + h * k3, coef)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run(states: np.ndarray, coef: FieldCoefficients, t_start: float, t_end: float, dt: float,
         record_every: int, record_from: float, strict: bool):
    n_full, last = step_schedule(t_end - t_start, dt)
    n_steps = n_full + (1 if last > 0 else 0)
    s = states.copy()
    failed = np.zeros(s.shape[0], dtype=bool)

    times, samples = [], []
    if t_start >= record_from - 1e-9:
        times.append(t_start)
        samples.append(s.copy())

    for k in range(1, n_steps + 1):
        is_last = k == n_steps
        h = last if (is_last and last > 0) else dt
        s = _rk4_step(s, h, coef)
        t = t_end if is_last else t_start + k * dt

        outside = np.any((s < -CLAMP_TOL) | (s > 1.0 + CLAMP_TOL) | ~np.isfinite(s), axis=-1)
        if np.any(outside):
            if strict:
                row = int(np.argmax(outside))
                logger.error(f"Integration left the unit cube at t={t:.6g}.")
                raise StepInstabilityError(t, s[row])
            newly = outside & ~failed
            if np.any(newly):
                logger.warning(f"{int(newly.sum())} trajectories left the unit cube at t={t:.6g}.")
            failed |= outside
            s[outside] = np.nan_to_num(s[outside], nan=0.5)
        np.clip(s, 0.0, 1.0, out=s)

        if (k % record_every == 0 or is_last) and t >= record_from - 1e-9:
            times.append(t)
            samples.append(s.copy())

    return np.array(times), np.stack(samples), failed


def integrate(state0: StateLike, scenario: Scenario, params: GameParameters,
              t_end: float = DEFAULT_T_END, dt: float = DEFAULT_DT, record_every: int = 1) -> Trajectory:
    """
    Integrate one trajectory with the classical fixed-step Runge-Kutta scheme.

    Sample times are ``k * dt``; when ``t_end`` is not a multiple of ``dt`` the
    last step is shortened to land on ``t_end``. Coordinates are clipped into
    the unit cube after every step if they left it by at most 1e-12.

    :param state0: Initial state.
    :param scenario: The scenario.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :param t_end: Final model time.
    :type t_end: float
    :param dt: Step size.
    :type dt: float
    :param record_every: Record every n-th step; the final state is always recorded.
    :type record_every: int
    :return: The recorded trajectory.
    :rtype: Trajectory
    :raises StepInstabilityError: if a step leaves the cube by more than the tolerance.
    """
    _check_integrator_args(t_end, dt, record_every)
    s0 = as_state_array(state0).reshape(1, 3)
    PopulationState.from_array(s0[0])
    coef = field_coefficients(scenario, params)
    times, samples, _ = _run(s0, coef, 0.0, float(t_end), float(dt), int(record_every), 0.0, strict=True)
    logger.debug(f"Integrated {scenario.name} from {s0[0].tolist()} to t={t_end} ({len(times)} samples).")
    return Trajectory(times, samples[:, 0, :], scenario, params)


def integrate_batch(states0, scenario: Scenario, params: GameParameters, t_end: float = DEFAULT_T_END,
                    dt: float = DEFAULT_DT, record_every: int = 1, record_from: Optional[float] = None,
                    t_start: float = 0.0) -> BatchTrajectory:
    """
    Integrate many initial states at once on a shared time grid.

    Runs that leave the unit cube are flagged in ``failed`` instead of raising.

    :param states0: Array of shape ``(N, 3)``.
    :param scenario: The scenario.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :param t_end: Final model time.
    :type t_end: float
    :param dt: Step size.
    :type dt: float
    :param record_every: Record every n-th step.
    :type record_every: int
    :param record_from: Only record samples at or after this time; defaults to ``t_end`` (final state only).
    :type record_from: float
    :param t_start: Model time of ``states0``, used to continue earlier runs.
    :type t_start: float
    :return: The recorded samples and the failure mask.
    :rtype: BatchTrajectory
    """
    if not t_end > t_start:
        raise InvalidArgumentError(f"t_end ({t_end}) must exceed t_start ({t_start}).")
    _check_integrator_args(t_end - t_start, dt, record_every)
    s0 = np.atleast_2d(as_state_array(states0))
    if np.any((s0 < 0.0) | (s0 > 1.0)):
        raise InvalidArgumentError("Initial states must lie in the unit cube.")
    record_from = float(t_end) if record_from is None else float(record_from)
    coef = field_coefficients(scenario, params)
    times, samples, failed = _run(s0, coef, float(t_start), float(t_end), float(dt),
                                  int(record_every), record_from, strict=False)
    return BatchTrajectory(times, samples, failed, scenario, params)
