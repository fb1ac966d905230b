"""
This module provides run configuration for StrategicDynamics: a ``key = value``
text format with ``#`` comments, parsed into a validated :class:`RunConfig`.
"""
# StrategicDynamics/config.py

import math
from dataclasses import dataclass, fields, replace
from typing import Dict, Optional, Tuple

from loguru import logger

from StrategicDynamics.basins import GRID_PLACEMENTS
from StrategicDynamics.game_model import BUILTIN_SCENARIOS, GameParameters, Scenario, custom_scenario, get_scenario
from StrategicDynamics.helpers import (ConfigError, ConfigParseError, InvalidArgumentError, InvalidParametersError,
                                       UnknownKeyError, resolve_threads)

# config key -> GameParameters field
PARAMETER_KEYS = {"rho": "rho", "lambda": "lam", "b": "b", "c_I": "c_i", "c_F": "c_f", "p_G": "p_g", "r": "r"}

# config key -> (RunConfig field, type)
SETTING_KEYS = {
    "t_end": ("t_end", float),
    "dt": ("dt", float),
    "record_every": ("record_every", int),
    "n_per_axis": ("n_per_axis", int),
    "n_random": ("n_random", int),
    "seed": ("seed", int),
    "tol_corner": ("tol_corner", float),
    "threads": ("threads", str),
    "out": ("out", str),
    "format": ("fmt", str),
    "placement": ("placement", str),
}

_KEY_LOOKUP = {key.lower(): key for key in ["scenario", *PARAMETER_KEYS, *SETTING_KEYS]}


@dataclass(frozen=True)
class RunConfig:
    """Scenario, game parameters and run settings of one invocation."""
    scenario: Scenario = BUILTIN_SCENARIOS["baseline"]
    params: GameParameters = GameParameters()
    t_end: float = 200.0
    dt: float = 0.01
    record_every: int = 1
    n_per_axis: int = 20
    n_random: int = 200
    seed: int = 0
    tol_corner: float = 1e-3
    threads: str = "1"
    out: Optional[str] = None
    fmt: Optional[str] = None
    placement: str = "centred"
    outcome_entries: Tuple[Tuple[str, str], ...] = ()

    def validate(self) -> "RunConfig":
        """
        Check game parameters and run settings.

        :raises InvalidParametersError: naming the violated invariant.
        """
        self.params.validate()
        if not self.t_end > 0:
            raise InvalidParametersError(f"t_end > 0 violated ({self.t_end}).")
        if not self.dt > 0:
            raise InvalidParametersError(f"dt > 0 violated ({self.dt}).")
        if self.record_every < 1:
            raise InvalidParametersError(f"record_every >= 1 violated ({self.record_every}).")
        if self.n_per_axis < 2:
            raise InvalidParametersError(f"n_per_axis >= 2 violated ({self.n_per_axis}).")
        if self.n_random < 0:
            raise InvalidParametersError(f"n_random >= 0 violated ({self.n_random}).")
        if not self.tol_corner > 0:
            raise InvalidParametersError(f"tol_corner > 0 violated ({self.tol_corner}).")
        if self.fmt is not None and self.fmt not in ("csv", "json"):
            raise InvalidParametersError(f"format must be csv or json, got '{self.fmt}'.")
        if self.placement not in GRID_PLACEMENTS:
            raise InvalidParametersError(f"placement must be one of {', '.join(GRID_PLACEMENTS)}, got '{self.placement}'.")
        try:
            resolve_threads(self.threads)
        except InvalidArgumentError as e:
            raise InvalidParametersError(str(e))
        return self

    @property
    def n_threads(self) -> int:
        return resolve_threads(self.threads)

    def with_overrides(self, **flags) -> "RunConfig":
        """
        Apply command-line flags on top of the file values; ``None`` means the flag was not given.

        Accepts ``scenario`` (a built-in name), the GameParameters field names and
        the RunConfig setting names.
        """
        changes = {k: v for k, v in flags.items() if v is not None}
        if not changes:
            return self
        param_names = {f.name for f in fields(GameParameters)}
        param_changes = {k: changes.pop(k) for k in list(changes) if k in param_names}
        config = self
        if "scenario" in changes:
            config = replace(config, scenario=get_scenario(changes.pop("scenario")), outcome_entries=())
        if param_changes:
            config = replace(config, params=config.params.replace(**param_changes))
        if "threads" in changes:
            changes["threads"] = str(changes["threads"])
        if "placement" in changes:
            changes["placement"] = str(changes["placement"]).lower()
        unknown = set(changes) - {f.name for f in fields(RunConfig)}
        if unknown:
            raise UnknownKeyError(sorted(unknown)[0])
        return replace(config, **changes).validate()


def _strip_comment(line: str) -> str:
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def _parse_value(raw: str, kind, source: str, line_no: int, column: int, key: str):
    try:
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError
            return value
    except (ValueError, OverflowError):
        raise ConfigParseError(source, line_no, column, f"value '{raw}' of '{key}' is not a valid {kind.__name__}")
    return raw


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Parse configuration text.

    :param text: Lines of ``key = value``; ``#`` starts a comment.
    :type text: str
    :param source: File name used in error messages.
    :type source: str
    :return: A validated configuration.
    :rtype: RunConfig
    """
    seen: Dict[str, int] = {}
    params: Dict[str, float] = {}
    settings: Dict[str, object] = {}
    outcomes: Dict[str, str] = {}
    scenario_name = "baseline"

    for line_no, line in enumerate(text.splitlines(), start=1):
        content = _strip_comment(line)
        if not content.strip():
            continue
        if "=" not in content:
            column = len(content) - len(content.lstrip()) + 1
            raise ConfigParseError(source, line_no, column, "expected 'key = value'")
        raw_key, raw_value = content.split("=", 1)
        key = raw_key.strip()
        value_column = len(raw_key) + 2 + (len(raw_value) - len(raw_value.lstrip()))
        value = raw_value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if not key:
            raise ConfigParseError(source, line_no, 1, "missing key before '='")
        if not value:
            raise ConfigParseError(source, line_no, value_column, f"missing value for '{key}'")
        if key.lower() in seen:
            raise ConfigParseError(source, line_no, 1, f"duplicate key '{key}' (first set on line {seen[key.lower()]})")
        seen[key.lower()] = line_no

        if key.lower().startswith("outcome."):
            outcomes[key] = value
            continue
        canonical = _KEY_LOOKUP.get(key.lower())
        if canonical is None:
            raise UnknownKeyError(key, source)
        if canonical == "scenario":
            scenario_name = value.lower()
        elif canonical in PARAMETER_KEYS:
            params[PARAMETER_KEYS[canonical]] = _parse_value(value, float, source, line_no, value_column, key)
        else:
            name, kind = SETTING_KEYS[canonical]
            settings[name] = _parse_value(value, kind, source, line_no, value_column, key)

    if scenario_name == "custom":
        scenario = custom_scenario(outcomes)
    else:
        if outcomes:
            raise InvalidParametersError(f"Outcome entries are only allowed with 'scenario = custom' ({source}).")
        scenario = get_scenario(scenario_name)
    for name in ("fmt", "placement"):
        if name in settings:
            settings[name] = str(settings[name]).lower()

    config = RunConfig(scenario=scenario, params=GameParameters(**params),
                       outcome_entries=tuple(sorted(outcomes.items())), **settings)
    return config.validate()


def load_config(path: Optional[str] = None) -> RunConfig:
    """
    Load and validate a configuration file.

    Omitted keys keep their defaults (lambda=50, rho=10, b=50, c_F=1, c_I=5,
    p_G=0.5, r=1, t_end=200, dt=0.01).

    :param path: Path to the file; None returns the defaults.
    :type path: str
    :return: The configuration.
    :rtype: RunConfig
    """
    if path is None:
        return RunConfig().validate()
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        logger.error(f"Cannot read config file {path}: {e}")
        raise ConfigError(f"Cannot read config file '{path}': {e}") from e
    config = parse_config(text, source=str(path))
    logger.info(f"Loaded config {path}: scenario={config.scenario.name}, params={config.params.to_dict()}.")
    return config


def dump_config(config: RunConfig) -> str:
    """Write a configuration back in the file format, so that parsing the text reproduces it."""
    scenario = "custom" if config.outcome_entries else config.scenario.name
    lines = [f"scenario = {scenario}"]
    for key, name in PARAMETER_KEYS.items():
        lines.append(f"{key} = {getattr(config.params, name)!r}")
    for key, (name, kind) in SETTING_KEYS.items():
        value = getattr(config, name)
        if value is None:
            continue
        lines.append(f"{key} = {value!r}" if kind is not str else f"{key} = {_quote(value)}")
    for key, value in config.outcome_entries:
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _quote(value: str) -> str:
    return f"'{value}'" if '"' in value else f'"{value}"'
