"""
This module provides the game definition of StrategicDynamics: the strategies
of institutions and users, the outcome tables of each scenario and the payoff
matrices built from them.
"""
# StrategicDynamics/game_model.py

from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Dict, Mapping, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from StrategicDynamics.helpers import InvalidParametersError


class InstitutionStrategy(Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"

    @property
    def tag(self) -> str:
        return self.value[0]


class UserType(Enum):
    GOOD = "good"
    BAD = "bad"


class UserStrategy(Enum):
    NOT_ADAPT = "NotAdapt"
    ADAPT = "Adapt"
    FAKE = "Fake"
    IMPROVE = "Improve"

    @classmethod
    def parse(cls, name: str) -> "UserStrategy":
        for member in cls:
            if member.value.lower() == name.strip().lower():
                return member
        raise ValueError(f"Unknown user strategy '{name}'.")


class ClassificationOutcome(Enum):
    TP = "TP"
    FP = "FP"
    TN = "TN"
    FN = "FN"

    @property
    def accepted(self) -> bool:
        return self in (ClassificationOutcome.TP, ClassificationOutcome.FP)

    def institution_payoff(self, params: "GameParameters") -> float:
        if self is ClassificationOutcome.TP:
            return params.rho
        if self is ClassificationOutcome.FP:
            return -params.lam
        return 0.0


REDUCED_INSTITUTION_STRATEGIES = (InstitutionStrategy.MEDIUM, InstitutionStrategy.HIGH)
EXTENDED_INSTITUTION_STRATEGIES = (InstitutionStrategy.LOW, InstitutionStrategy.MEDIUM, InstitutionStrategy.HIGH)

# index 0 is the strategy whose share is the state coordinate
REDUCED_USER_STRATEGIES = {
    UserType.GOOD: (UserStrategy.NOT_ADAPT, UserStrategy.ADAPT),
    UserType.BAD: (UserStrategy.FAKE, UserStrategy.IMPROVE),
}
EXTENDED_USER_STRATEGIES = (UserStrategy.NOT_ADAPT, UserStrategy.FAKE, UserStrategy.IMPROVE)

OutcomeKey = Tuple[InstitutionStrategy, UserType, UserStrategy]


@dataclass(frozen=True)
class GameParameters:
    """
    Payoff constants of the game plus the evolutionary rate of institutions.

    ``p_B`` is derived as ``1 - p_G``.
    """
    rho: float = 10.0
    lam: float = 50.0
    b: float = 50.0
    c_i: float = 5.0
    c_f: float = 1.0
    p_g: float = 0.5
    r: float = 1.0

    @property
    def p_b(self) -> float:
        return 1.0 - self.p_g

    def validate(self) -> "GameParameters":
        """
        Check every parameter invariant.

        :return: The parameters themselves, so calls can be chained.
        :rtype: GameParameters
        :raises InvalidParametersError: naming the first violated invariant.
        """
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise InvalidParametersError(f"{_DISPLAY_NAMES[f.name]} must be finite, got {value}.")
        for name in ("rho", "lam", "b", "c_i", "c_f", "r"):
            if getattr(self, name) <= 0:
                raise InvalidParametersError(f"{_DISPLAY_NAMES[name]} > 0 violated ({getattr(self, name)}).")
        if not self.c_f < self.c_i:
            raise InvalidParametersError(f"c_F < c_I violated (c_F={self.c_f}, c_I={self.c_i}).")
        if not self.c_i < self.b:
            raise InvalidParametersError(f"c_I < b violated (c_I={self.c_i}, b={self.b}).")
        if not 0.0 <= self.p_g <= 1.0:
            raise InvalidParametersError(f"0 <= p_G <= 1 violated (p_G={self.p_g}).")
        return self

    def replace(self, **changes) -> "GameParameters":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return GameParameters(**values)

    def to_dict(self) -> Dict[str, float]:
        return {_DISPLAY_NAMES[f.name]: getattr(self, f.name) for f in fields(self)}


_DISPLAY_NAMES = {"rho": "rho", "lam": "lambda", "b": "b", "c_i": "c_I", "c_f": "c_F", "p_g": "p_G", "r": "r"}


@dataclass(frozen=True)
class OutcomeTable:
    """
    Classification outcome of every (institution strategy, user type, user strategy) triple.

    Entries are stored as a sorted tuple so that tables are hashable values.
    """
    entries: Tuple[Tuple[OutcomeKey, ClassificationOutcome], ...]
    institution_strategies: Tuple[InstitutionStrategy, ...] = REDUCED_INSTITUTION_STRATEGIES

    @classmethod
    def from_mapping(cls, mapping: Mapping[OutcomeKey, ClassificationOutcome],
                     institution_strategies=REDUCED_INSTITUTION_STRATEGIES) -> "OutcomeTable":
        entries = tuple(sorted(mapping.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2].value)))
        table = cls(entries, tuple(institution_strategies))
        table.check_total()
        return table

    def as_dict(self) -> Dict[OutcomeKey, ClassificationOutcome]:
        return dict(self.entries)

    def outcome(self, institution: InstitutionStrategy, user_type: UserType, strategy: UserStrategy) -> ClassificationOutcome:
        return self.as_dict()[(institution, user_type, strategy)]

    def user_strategies(self, user_type: UserType) -> Tuple[UserStrategy, ...]:
        if len(self.institution_strategies) == 3:
            return EXTENDED_USER_STRATEGIES
        return REDUCED_USER_STRATEGIES[user_type]

    def keys(self):
        return [(inst, user_type, strategy)
                for inst in self.institution_strategies
                for user_type in UserType
                for strategy in self.user_strategies(user_type)]

    def check_total(self):
        mapping = self.as_dict()
        missing = [key for key in self.keys() if key not in mapping]
        if missing:
            names = ", ".join(f"{i.tag}.{t.value}.{s.value}" for i, t, s in missing)
            raise InvalidParametersError(f"Outcome table is missing entries: {names}.")
        extra = set(mapping) - set(self.keys())
        if extra:
            names = ", ".join(f"{i.tag}.{t.value}.{s.value}" for i, t, s in sorted(extra, key=str))
            raise InvalidParametersError(f"Outcome table has entries outside the strategy sets: {names}.")

    def differences(self, other: "OutcomeTable"):
        mine, theirs = self.as_dict(), other.as_dict()
        return sorted((key for key in mine if mine[key] != theirs.get(key)), key=str)


@dataclass(frozen=True)
class Scenario:
    name: str
    table: OutcomeTable

    @property
    def is_builtin(self) -> bool:
        return self.name in BUILTIN_SCENARIOS and BUILTIN_SCENARIOS[self.name].table == self.table


M, H = InstitutionStrategy.MEDIUM, InstitutionStrategy.HIGH
G, B = UserType.GOOD, UserType.BAD
NA, A, F, I = UserStrategy.NOT_ADAPT, UserStrategy.ADAPT, UserStrategy.FAKE, UserStrategy.IMPROVE
TP, FP, TN, FN = ClassificationOutcome.TP, ClassificationOutcome.FP, ClassificationOutcome.TN, ClassificationOutcome.FN

_BASELINE_OUTCOMES = {
    (M, G, NA): TP, (M, G, A): TP, (M, B, F): FP, (M, B, I): TP,
    (H, G, NA): FN, (H, G, A): TP, (H, B, F): TN, (H, B, I): FN,
}

BASELINE = Scenario("baseline", OutcomeTable.from_mapping(_BASELINE_OUTCOMES))
MANIPULATION_PROOF = Scenario("manipulation_proof", OutcomeTable.from_mapping({**_BASELINE_OUTCOMES, (M, B, F): TN}))
RECOURSE = Scenario("recourse", OutcomeTable.from_mapping({**_BASELINE_OUTCOMES, (H, B, I): TP}))

BUILTIN_SCENARIOS = {s.name: s for s in (BASELINE, MANIPULATION_PROOF, RECOURSE)}


def get_scenario(name: str) -> Scenario:
    """
    Look up a built-in scenario by name.

    :param name: One of ``baseline``, ``manipulation_proof`` or ``recourse``.
    :type name: str
    :return: The scenario.
    :rtype: Scenario
    """
    key = name.strip().lower()
    if key not in BUILTIN_SCENARIOS:
        raise InvalidParametersError(
            f"Unknown scenario '{name}', expected one of {', '.join(BUILTIN_SCENARIOS)} or custom.")
    return BUILTIN_SCENARIOS[key]


def custom_scenario(entries: Mapping[str, str], name: str = "custom") -> Scenario:
    """
    Build a scenario from ``outcome.<M|H>.<good|bad>.<strategy>`` config entries.

    :param entries: Maps keys such as ``outcome.M.bad.Fake`` to ``TP``, ``FP``, ``TN`` or ``FN``.
    :type entries: dict
    :param name: Name reported for the scenario.
    :type name: str
    :return: A scenario over the reduced strategy sets.
    :rtype: Scenario
    """
    mapping = {}
    for key, value in entries.items():
        parts = key.split(".")
        if len(parts) != 4 or parts[0] != "outcome":
            raise InvalidParametersError(f"Malformed outcome key '{key}'.")
        _, inst_tag, type_name, strategy_name = parts
        institution = {"M": M, "H": H}.get(inst_tag.upper())
        try:
            user_type = UserType(type_name.lower())
            strategy = UserStrategy.parse(strategy_name)
            outcome = ClassificationOutcome(value.strip().upper())
        except ValueError:
            institution = None
        if institution is None or strategy not in REDUCED_USER_STRATEGIES[user_type]:
            raise InvalidParametersError(f"Invalid outcome entry '{key} = {value}'.")
        mapping[(institution, user_type, strategy)] = outcome
    table = OutcomeTable.from_mapping(mapping)
    logger.debug(f"Built custom scenario '{name}' with {len(mapping)} outcome entries.")
    return Scenario(name, table)


def user_cost(strategy: UserStrategy, params: GameParameters) -> float:
    if strategy is UserStrategy.NOT_ADAPT:
        return 0.0
    if strategy is UserStrategy.FAKE:
        return params.c_f
    return params.c_i


@dataclass(frozen=True, eq=False)
class PayoffMatrices:
    """
    The four payoff matrices of the game, rows indexed by institution strategy
    and columns by user strategy.
    """
    I_G: np.ndarray
    I_B: np.ndarray
    U_G: np.ndarray
    U_B: np.ndarray
    institution_strategies: Tuple[InstitutionStrategy, ...] = REDUCED_INSTITUTION_STRATEGIES
    good_strategies: Tuple[UserStrategy, ...] = REDUCED_USER_STRATEGIES[UserType.GOOD]
    bad_strategies: Tuple[UserStrategy, ...] = REDUCED_USER_STRATEGIES[UserType.BAD]

    def entry(self, matrix: str, institution: InstitutionStrategy, strategy: UserStrategy) -> float:
        columns = self.good_strategies if matrix.endswith("G") else self.bad_strategies
        return float(getattr(self, matrix)[self.institution_strategies.index(institution), columns.index(strategy)])


def _payoffs_from_table(table: OutcomeTable, params: GameParameters) -> PayoffMatrices:
    rows = table.institution_strategies
    good, bad = table.user_strategies(UserType.GOOD), table.user_strategies(UserType.BAD)
    mats = {}
    for user_type, columns in ((UserType.GOOD, good), (UserType.BAD, bad)):
        inst = np.zeros((len(rows), len(columns)))
        user = np.zeros((len(rows), len(columns)))
        for i, institution in enumerate(rows):
            for j, strategy in enumerate(columns):
                outcome = table.outcome(institution, user_type, strategy)
                inst[i, j] = outcome.institution_payoff(params)
                user[i, j] = (params.b if outcome.accepted else 0.0) - user_cost(strategy, params)
        suffix = "G" if user_type is UserType.GOOD else "B"
        mats[f"I_{suffix}"], mats[f"U_{suffix}"] = inst, user
    for matrix in mats.values():
        matrix.setflags(write=False)
    return PayoffMatrices(institution_strategies=rows, good_strategies=good, bad_strategies=bad, **mats)


def build_payoffs(scenario: Scenario, params: GameParameters) -> PayoffMatrices:
    """
    Construct the payoff matrices of a scenario.

    Institutions earn ``rho`` for a true positive, lose ``lambda`` for a false
    positive and earn nothing otherwise; users earn ``b`` when accepted minus
    the cost of their strategy.

    :param scenario: The scenario whose outcome table is used.
    :type scenario: Scenario
    :param params: Validated game parameters.
    :type params: GameParameters
    :return: ``I_G``, ``I_B``, ``U_G`` and ``U_B``.
    :rtype: PayoffMatrices
    """
    params.validate()
    return _payoffs_from_table(scenario.table, params)


# --- Extended game with the Low strategy ---
def extend_outcome_table(table: OutcomeTable) -> OutcomeTable:
    """
    Extend a reduced outcome table to three institution and three user strategies.

    Low accepts everyone; Medium and High reject Bad users who do not adapt;
    faking Good users are accepted; improving Good users are treated like
    adapting ones.
    """
    mapping = {}
    for institution in EXTENDED_INSTITUTION_STRATEGIES:
        for strategy in EXTENDED_USER_STRATEGIES:
            if institution is InstitutionStrategy.LOW:
                good = TP
                bad = TP if strategy is I else FP
            else:
                reduced_good = {NA: NA, F: A, I: A}[strategy]
                good = TP if strategy is F else table.outcome(institution, G, reduced_good)
                bad = TN if strategy is NA else table.outcome(institution, B, strategy)
            mapping[(institution, G, strategy)] = good
            mapping[(institution, B, strategy)] = bad
    return OutcomeTable.from_mapping(mapping, EXTENDED_INSTITUTION_STRATEGIES)


def build_extended_payoffs(scenario: Scenario, params: GameParameters) -> PayoffMatrices:
    params.validate()
    return _payoffs_from_table(extend_outcome_table(scenario.table), params)


@dataclass(frozen=True)
class DominanceReport:
    scenario: str
    equal_vs_good: bool
    dominated_vs_bad: bool
    low_vs_bad: Tuple[float, ...] = field(default=())
    medium_vs_bad: Tuple[float, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return self.equal_vs_good and self.dominated_vs_bad

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "equal_vs_good": self.equal_vs_good,
            "dominated_vs_bad": self.dominated_vs_bad,
            "passed": self.passed,
            "low_vs_bad": list(self.low_vs_bad),
            "medium_vs_bad": list(self.medium_vs_bad),
        }

    def to_frame(self):
        return pd.DataFrame([{k: v for k, v in self.to_dict().items() if not isinstance(v, list)}])


def check_low_dominance(scenario: Scenario, params: GameParameters) -> DominanceReport:
    """
    Verify that Low is dominated by Medium in the extended game of a scenario.

    :param scenario: Scenario to extend.
    :type scenario: Scenario
    :param params: Game parameters.
    :type params: GameParameters
    :return: Whether Low equals Medium against Good users and is weakly, and somewhere strictly,
        worse against Bad users.
    :rtype: DominanceReport
    """
    mats = build_extended_payoffs(scenario, params)
    low, medium = (mats.institution_strategies.index(s) for s in (InstitutionStrategy.LOW, InstitutionStrategy.MEDIUM))
    equal_vs_good = bool(np.array_equal(mats.I_G[low], mats.I_G[medium]))
    low_bad, medium_bad = mats.I_B[low], mats.I_B[medium]
    dominated_vs_bad = bool(np.all(low_bad <= medium_bad) and np.any(low_bad < medium_bad))
    report = DominanceReport(scenario.name, equal_vs_good, dominated_vs_bad,
                             tuple(float(v) for v in low_bad), tuple(float(v) for v in medium_bad))
    logger.info(f"Low dominance for {scenario.name}: passed={report.passed}.")
    return report


def corner_label(state) -> str:
    """Tag of a corner state, e.g. ``(H,A,F)`` for (0, 0, 1)."""
    x1, yg1, yb1 = (round(float(v)) for v in state)
    return f"({'M' if x1 else 'H'},{'NA' if yg1 else 'A'},{'F' if yb1 else 'I'})"
