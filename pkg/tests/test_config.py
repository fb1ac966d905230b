# tests/test_config.py

import pytest

from StrategicDynamics.config import RunConfig, dump_config, load_config, parse_config
from StrategicDynamics.game_model import GameParameters, MANIPULATION_PROOF
from StrategicDynamics.helpers import ConfigError, ConfigParseError, InvalidParametersError, UnknownKeyError

CUSTOM = """
scenario = custom
outcome.M.good.NotAdapt = TP
outcome.M.good.Adapt = TP
outcome.M.bad.Fake = TN
outcome.M.bad.Improve = TP
outcome.H.good.NotAdapt = FN
outcome.H.good.Adapt = TP
outcome.H.bad.Fake = TN
outcome.H.bad.Improve = FN
"""


def test_defaults():
    config = load_config()
    assert config.params == GameParameters()
    assert config.scenario.name == "baseline"
    assert (config.t_end, config.dt, config.n_per_axis, config.n_random) == (200.0, 0.01, 20, 200)
    assert config.fmt is None and config.out is None


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# stronger Good-user prior\np_G = 0.85\nrho = 20   # stronger penalty\n", encoding="utf-8")
    config = load_config(str(path))
    assert config.params.p_g == 0.85
    assert config.params.rho == 20.0
    assert config.params.lam == 50.0


def test_keys_are_case_insensitive_and_values_may_be_quoted():
    config = parse_config('Scenario = "recourse"\nLAMBDA = 40\nformat = JSON\nthreads = auto\n')
    assert config.scenario.name == "recourse"
    assert config.params.lam == 40.0
    assert config.fmt == "json"
    assert config.n_threads >= 1


def test_invalid_parameters_are_rejected():
    with pytest.raises(InvalidParametersError, match="c_F < c_I"):
        parse_config("c_F = 7\n")


def test_unknown_key():
    with pytest.raises(UnknownKeyError) as info:
        parse_config("alpha = 1\n", source="run.cfg")
    assert info.value.key == "alpha"
    assert info.value.exit_code == 2
    assert "run.cfg" in str(info.value)


def test_parse_errors_carry_line_and_column():
    with pytest.raises(ConfigParseError) as info:
        parse_config("rho = 10\n\n  lambda 50\n", source="run.cfg")
    assert (info.value.line, info.value.column) == (3, 3)
    assert str(info.value).startswith("run.cfg:3:3:")

    with pytest.raises(ConfigParseError) as info:
        parse_config("rho = ten\n")
    assert (info.value.line, info.value.column) == (1, 7)

    with pytest.raises(ConfigParseError, match="duplicate key"):
        parse_config("rho = 10\nRHO = 20\n")

    with pytest.raises(ConfigParseError, match="not a valid int"):
        parse_config("n_per_axis = 2.5\n")


@pytest.mark.parametrize("text", ["seed = inf\n", "n_per_axis = 1e400\n", "t_end = nan\n", "rho = -inf\n"])
def test_non_finite_values_are_parse_errors(text):
    with pytest.raises(ConfigParseError) as info:
        parse_config(text)
    assert info.value.line == 1
    assert info.value.exit_code == 2


def test_hash_inside_quotes_is_not_a_comment():
    config = parse_config('out = "runs/#3/basins.json"  # third run\nformat = csv\n')
    assert config.out == "runs/#3/basins.json"
    assert parse_config(dump_config(config)) == config


def test_grid_placement_setting():
    assert load_config().placement == "centred"
    config = parse_config("placement = Inclusive\n")
    assert config.placement == "inclusive"
    assert parse_config(dump_config(config)) == config
    with pytest.raises(InvalidParametersError, match="placement"):
        parse_config("placement = edges\n")


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.cfg"))


def test_outcome_entries_need_a_custom_scenario():
    with pytest.raises(InvalidParametersError, match="scenario = custom"):
        parse_config("outcome.M.bad.Fake = TN\n")


def test_custom_scenario_config():
    config = parse_config(CUSTOM)
    assert config.scenario.table == MANIPULATION_PROOF.table
    assert not config.scenario.is_builtin
    again = parse_config(dump_config(config))
    assert again.scenario.table == config.scenario.table


def test_dump_config_round_trip():
    config = parse_config("scenario = recourse\nrho = 12.5\np_G = 0.7\nt_end = 80\nformat = csv\nseed = 3\n")
    assert parse_config(dump_config(config)) == config


def test_with_overrides():
    config = load_config().with_overrides(scenario="manipulation_proof", p_g=0.9, threads=4, out=None)
    assert config.scenario is MANIPULATION_PROOF
    assert config.params.p_g == 0.9
    assert config.threads == "4" and config.n_threads == 4
    assert config.out is None
    assert RunConfig().with_overrides() == RunConfig()


@pytest.mark.parametrize("flags, error", [
    ({"threads": "many"}, InvalidParametersError),
    ({"dt": 0.0}, InvalidParametersError),
    ({"fmt": "xml"}, InvalidParametersError),
    ({"placement": "edges"}, InvalidParametersError),
    ({"colour": "red"}, UnknownKeyError),
])
def test_bad_overrides(flags, error):
    with pytest.raises(error):
        load_config().with_overrides(**flags)
