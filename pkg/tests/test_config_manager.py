"""
Tests for configuration loading, validation and persistence.
"""

import json

from lonely_passenger.config_manager import DEFAULT_CONFIG, ConfigManager


def test_defaults_when_file_missing(tmp_path, monkeypatch):
    monkeypatch.delenv("LONELY_PASSENGER_ENUM_LIMIT", raising=False)
    manager = ConfigManager(tmp_path / "missing.json")
    assert manager.get_enum_limit() == 1_000_000
    assert manager.get_default_seed() == 0
    assert manager.get_output_format() == "csv"
    assert manager.get_checks_config()["fit_alpha"] == 0.001
    assert not (tmp_path / "missing.json").exists()


def test_partial_file_is_merged(tmp_path):
    path = tmp_path / "partial.json"
    path.write_text(json.dumps({"sampling": {"paths": 500}}))
    manager = ConfigManager(path)
    assert manager.get_sampling_config()["paths"] == 500
    assert manager.get_batch_size() == DEFAULT_CONFIG["sampling"]["batch_size"]


def test_invalid_file_falls_back_to_defaults(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"output": {"format": "xml"}}))
    manager = ConfigManager(path)
    assert manager.get_output_format() == "csv"


def test_unreadable_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert ConfigManager(path).get_workers() == 1


def test_environment_overrides_limit(manager, monkeypatch):
    monkeypatch.setenv("LONELY_PASSENGER_ENUM_LIMIT", "5000")
    assert manager.get_enum_limit() == 5000
    monkeypatch.setenv("LONELY_PASSENGER_ENUM_LIMIT", "lots")
    assert manager.get_enum_limit() == 1_000_000
    monkeypatch.setenv("LONELY_PASSENGER_ENUM_LIMIT", str(10 ** 9))
    assert manager.get_enum_limit() == 1_000_000


def test_update_section_validates_and_saves(manager, config_file):
    result = manager.update_section("sampling", {"workers": 4})
    assert result["success"]
    assert manager.get_workers() == 4
    assert json.loads(config_file.read_text())["sampling"]["workers"] == 4

    result = manager.update_section("sampling", {"workers": 0})
    assert not result["success"]
    assert manager.get_workers() == 4

    assert not manager.update_section("plotting", {})["success"]


def test_set_enum_limit(manager):
    manager.set_enum_limit(2000)
    assert manager.get_enum_limit() == 2000


def test_reset_to_defaults(manager):
    manager.update_section("mc", {"sigma_threshold": 3.0})
    assert manager.reset_to_defaults("mc")["success"]
    assert manager.get_mc_config()["sigma_threshold"] == 5.0
    assert not manager.reset_to_defaults("telemetry")["success"]
    assert manager.reset_to_defaults()["success"]
    assert manager.get_all_config() == DEFAULT_CONFIG
