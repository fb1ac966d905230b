"""This module provides classifier performance and social cost metrics for population states and trajectories."""
# StrategicDynamics/metrics.py

from dataclasses import dataclass

import numpy as np
import pandas as pd

from StrategicDynamics.dynamics import StateLike, Trajectory, as_state_array
from StrategicDynamics.game_model import ClassificationOutcome, GameParameters, Scenario, UserType

METRIC_COLUMNS = ["tp", "tn", "fp", "fn", "social_cost"]


@dataclass(frozen=True, eq=False)
class OutcomeFrequencies:
    tp: np.ndarray
    tn: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def total(self) -> np.ndarray:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


def outcome_frequencies(state: StateLike, scenario: Scenario, params: GameParameters) -> OutcomeFrequencies:
    """
    Expected share of every classification outcome when each user meets the institution mix.

    :param state: One state or an ``(N, 3)`` stack.
    :param scenario: Scenario whose outcome table labels each encounter.
    :type scenario: Scenario
    :param params: Game parameters, used for ``p_G``.
    :type params: GameParameters
    :return: TP, TN, FP and FN frequencies.
    :rtype: OutcomeFrequencies
    """
    s = as_state_array(state)
    institution_share = {
        scenario.table.institution_strategies[0]: s[..., 0],
        scenario.table.institution_strategies[1]: 1.0 - s[..., 0],
    }
    user_share = {UserType.GOOD: (params.p_g, s[..., 1]), UserType.BAD: (params.p_b, s[..., 2])}

    totals = {outcome: np.zeros(s.shape[:-1]) for outcome in ClassificationOutcome}
    for (institution, user_type, strategy), outcome in scenario.table.entries:
        proportion, first_share = user_share[user_type]
        first = scenario.table.user_strategies(user_type)[0]
        strategy_share = first_share if strategy is first else 1.0 - first_share
        totals[outcome] = totals[outcome] + institution_share[institution] * proportion * strategy_share
    return OutcomeFrequencies(
        tp=totals[ClassificationOutcome.TP], tn=totals[ClassificationOutcome.TN],
        fp=totals[ClassificationOutcome.FP], fn=totals[ClassificationOutcome.FN],
    )


def social_cost(state: StateLike) -> np.ndarray:
    """Share of Good users who pay to adapt, ``1 - yG1``."""
    return 1.0 - as_state_array(state)[..., 1]


def expected_institution_payoff(freqs: OutcomeFrequencies, params: GameParameters) -> np.ndarray:
    return params.rho * freqs.tp - params.lam * freqs.fp


def annotate_trajectory(traj: Trajectory) -> pd.DataFrame:
    """
    Trajectory table with outcome frequencies and social cost appended to every sample.

    :param traj: A trajectory carrying its scenario and parameters.
    :type traj: Trajectory
    :return: Columns ``t,x1,x2,yG1,yG2,yB1,yB2,tp,tn,fp,fn,social_cost``.
    :rtype: pandas.DataFrame
    """
    frame = traj.to_frame()
    freqs = outcome_frequencies(traj.states, traj.scenario, traj.params)
    for column, values in freqs.to_dict().items():
        frame[column] = values
    frame["social_cost"] = social_cost(traj.states)
    return frame
