import json

import pytest
from click.testing import CliRunner

from lonely_passenger.config_manager import DEFAULT_CONFIG, ConfigManager


@pytest.fixture
def config_file(tmp_path):
    """A config file holding the defaults, isolated from the project file."""
    path = tmp_path / "lonely_passenger_config.json"
    path.write_text(json.dumps(DEFAULT_CONFIG))
    return path


@pytest.fixture
def manager(config_file, monkeypatch):
    monkeypatch.delenv("LONELY_PASSENGER_ENUM_LIMIT", raising=False)
    return ConfigManager(config_file)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def invoke(runner, config_file):
    """Run the CLI against the isolated config with quiet logging."""
    from lonely_passenger.cli import cli

    def _invoke(*args):
        return runner.invoke(cli, ["--config", str(config_file), "--log-level", "ERROR", "--quiet", *args])

    return _invoke
