"""Tests for settings module."""

from pathlib import Path

import pytest

from co2monitor.exceptions import ConfigurationError
from co2monitor.settings import (
    CONFIG_NAME,
    CO2MonitorConfig,
    config_issues,
    create_sample_config,
    get_config_path,
    load_config,
    load_run_config,
    save_config,
)


class TestLoadConfig:
    """Tests for load_config and save_config."""

    def test_defaults_without_file(self, tmp_path):
        """Test that a missing file gives the defaults."""
        config = load_config(tmp_path / "absent.toml")
        assert config == CO2MonitorConfig()
        assert config.monitor.k == 61
        assert config.calibration.replications == 100_000

    def test_partial_file(self, tmp_path):
        """Test that given keys override and others keep their defaults."""
        path = tmp_path / "settings.toml"
        path.write_text("[monitor]\nalpha = 0.1\n\n[calibration]\nthreads = 4\n")
        config = load_config(path)
        assert config.monitor.alpha == 0.1
        assert config.monitor.horizon == 30
        assert config.calibration.threads == 4

    def test_unknown_key(self, tmp_path):
        """Test that a misspelled key is an error."""
        path = tmp_path / "settings.toml"
        path.write_text("[monitor]\nalhpa = 0.1\n")
        with pytest.raises(ConfigurationError, match="alhpa"):
            load_config(path)

    def test_unknown_section(self, tmp_path):
        """Test that an unknown section is an error."""
        path = tmp_path / "settings.toml"
        path.write_text("[cleanup]\nage = 3\n")
        with pytest.raises(ConfigurationError, match="cleanup"):
            load_config(path)

    def test_invalid_toml(self, tmp_path):
        """Test that a malformed file is reported."""
        path = tmp_path / "settings.toml"
        path.write_text("[monitor\n")
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_save_and_reload(self, tmp_path):
        """Test that saved settings load back unchanged."""
        config = CO2MonitorConfig()
        config.monitor.alpha = 0.32
        config.diagnostics.q = {"1": 3.84, "10": 18.31}
        path = tmp_path / "nested" / "settings.toml"
        save_config(config, path)
        assert load_config(path) == config

    def test_critical_values(self):
        """Test conversion of the diagnostics section."""
        values = CO2MonitorConfig().diagnostics.critical_values()
        assert values.jb == 5.99
        assert values.q == {1: 3.84, 5: 11.07}


class TestConfigPath:
    """Tests for get_config_path function."""

    def test_home_default(self):
        """Test that the home directory is used without a local file."""
        assert get_config_path() == Path.home() / CONFIG_NAME

    def test_local_first(self):
        """Test that a file in the working directory wins."""
        local = Path.cwd() / CONFIG_NAME
        local.write_text("")
        assert get_config_path() == local


class TestSampleConfig:
    """Tests for create_sample_config."""

    def test_sample_loads_cleanly(self, tmp_path):
        """Test that the sample file is valid and matches the defaults."""
        path = tmp_path / CONFIG_NAME
        create_sample_config(path)
        config = load_config(path)
        assert config_issues(config) == []
        assert config == CO2MonitorConfig()


class TestConfigIssues:
    """Tests for config_issues function."""

    def test_reports_each_problem(self):
        """Test that every out-of-range value is listed."""
        config = CO2MonitorConfig()
        config.monitor.alpha = 0.7
        config.monitor.k = 2
        config.calibration.threads = 0
        config.output.format = "json"
        issues = config_issues(config)
        assert len(issues) == 4
        assert any("alpha" in issue for issue in issues)
        assert any("output.format" in issue for issue in issues)

    def test_lags(self):
        """Test that Ljung-Box lags must be positive integers."""
        config = CO2MonitorConfig()
        config.diagnostics.lags = [0, 5]
        assert config_issues(config) == ["diagnostics.lags must be a non-empty list of positive integers"]
        config.diagnostics.lags = []
        assert len(config_issues(config)) == 1


class TestRunConfig:
    """Tests for load_run_config function."""

    def test_values_and_comments(self, tmp_path):
        """Test coercion, comments and dash normalization."""
        path = tmp_path / "run.conf"
        path.write_text(
            "# experiment settings\n"
            "alpha = 0.1\n"
            "horizon=inf\n"
            "\n"
            "replications = 2000  # quick\n"
            "gaussianity-check = false\n"
        )
        values = load_run_config(path)
        assert values == {
            "alpha": 0.1,
            "horizon": "inf",
            "replications": 2000,
            "gaussianity_check": False,
        }

    def test_unknown_key(self, tmp_path):
        """Test that keys outside the allowed set report the line."""
        path = tmp_path / "run.conf"
        path.write_text("alpha=0.1\nbeta=2\n")
        with pytest.raises(ConfigurationError, match=r"run\.conf:2: unknown key 'beta'"):
            load_run_config(path, allowed={"alpha"})

    def test_malformed_line(self, tmp_path):
        """Test that a line without '=' is an error."""
        path = tmp_path / "run.conf"
        path.write_text("alpha 0.1\n")
        with pytest.raises(ConfigurationError, match="expected key=value"):
            load_run_config(path)

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file is a configuration error."""
        with pytest.raises(ConfigurationError):
            load_run_config(tmp_path / "absent.conf")
