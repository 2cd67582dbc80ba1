import json

import pytest

from orderdrop.experiments.config import ConfigError, data_dir, default_config, load_config, parse_config


@pytest.mark.parametrize("experiment", ["svd", "central", "federated", "cost"])
def test_canonical_round_trip(experiment):
    cfg = parse_config(json.dumps({"seeds": [4], "optimizer": {"lr": 0.05}}), experiment)
    again = parse_config(cfg.canonical_json())
    assert again == cfg
    assert again.canonical_json() == cfg.canonical_json()


def test_missing_keys_take_experiment_defaults():
    cfg = parse_config('{"federation": {"rounds": 3}}', "federated")
    assert cfg.federation.rounds == 3
    assert cfg.optimizer == default_config("federated").optimizer
    assert parse_config("", "svd") == default_config("svd")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config('{"optimiser": {}}')
    with pytest.raises(ConfigError, match=r"config\.svd: unknown keys \['step'\]"):
        parse_config('{"svd": {"step": 3}}')


def test_type_and_value_errors():
    with pytest.raises(ConfigError, match="expected an integer"):
        parse_config('{"federation": {"rounds": 2.5}}')
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config('{"optimizer": {"lr": "fast"}}')
    with pytest.raises(ConfigError):
        parse_config('{"seeds": []}')
    with pytest.raises(ConfigError, match="not 'svd'"):
        parse_config('{"experiment": "central"}', "svd")


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match="line 2, column 1"):
        parse_config('{"seeds": [1],\n}')


def test_load_config_and_data_dir(tmp_path, monkeypatch):
    path = tmp_path / "c.json"
    path.write_text('{"task": {"data_dir": "/somewhere"}}')
    assert data_dir(load_config(path, "central")) == "/somewhere"
    monkeypatch.setenv("ORDERDROP_DATA", str(tmp_path))
    assert data_dir(default_config("central")) == str(tmp_path)
