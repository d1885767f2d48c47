"""Configuration management for co2monitor."""

from __future__ import annotations

import tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import tomlkit

from .calibration import DEFAULT_REPLICATIONS, DEFAULT_SEED, DEFAULT_START_YEAR, INDEFINITE_PROXY
from .diagnostics import CriticalValues
from .exceptions import ConfigurationError
from .scenario import DEFAULT_ABATEMENT, DEFAULT_E_BASE

CONFIG_NAME = ".co2monitor.toml"


@dataclass
class DiagnosticsSettings:
    """Critical values for the diagnostics decisions."""

    jb: float = 5.99
    ks: float = 0.18
    ad: float = 0.74
    q: dict[str, float] = field(default_factory=lambda: {"1": 3.84, "5": 11.07})
    lags: list[int] = field(default_factory=lambda: [1, 5])

    def critical_values(self) -> CriticalValues:
        return CriticalValues(
            jb=self.jb, ks=self.ks, ad=self.ad, q={int(k): float(v) for k, v in self.q.items()}
        )


@dataclass
class CalibrationSettings:
    """Settings for Monte Carlo boundary calibration."""

    replications: int = DEFAULT_REPLICATIONS
    seed: int = DEFAULT_SEED
    boundary: str = "sqrt"
    indefinite_horizon: int = INDEFINITE_PROXY
    cache_file: str = "~/.cache/co2monitor/constants.txt"
    threads: int = 1


@dataclass
class MonitorSettings:
    """Defaults for a new monitor."""

    k: int = 61
    alpha: float = 0.05
    horizon: int = 30
    gaussianity_check: bool = True
    start_year: int = DEFAULT_START_YEAR


@dataclass
class SimulationSettings:
    """Defaults for simulation experiments."""

    replications: int = 10_000
    e_base: float = DEFAULT_E_BASE
    g: float = DEFAULT_ABATEMENT


@dataclass
class OutputSettings:
    """Settings for output display."""

    format: str = "text"  # text, csv
    decimals: int = 2


@dataclass
class CO2MonitorConfig:
    """Main configuration for co2monitor."""

    diagnostics: DiagnosticsSettings = field(default_factory=DiagnosticsSettings)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    monitor: MonitorSettings = field(default_factory=MonitorSettings)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    @property
    def cache_path(self) -> Path:
        return Path(self.calibration.cache_file).expanduser()


_SECTIONS = ("diagnostics", "calibration", "monitor", "simulation", "output")


def get_config_path() -> Path:
    """Get the path to the configuration file."""
    # Check for config in current directory first
    local_config = Path.cwd() / CONFIG_NAME
    if local_config.exists():
        return local_config

    # Then check user's home directory
    return Path.home() / CONFIG_NAME


def _merge_section(section: Any, data: dict[str, Any], name: str) -> Any:
    known = {f.name for f in fields(section)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in [{name}]: {', '.join(sorted(unknown))}")
    values = asdict(section)
    values.update(data)
    return type(section)(**values)


def load_config(config_path: Path | None = None) -> CO2MonitorConfig:
    """Load configuration from file.

    Args:
        config_path: Path to config file. If None, uses default locations.

    Returns:
        CO2MonitorConfig instance

    Raises:
        ConfigurationError: If config file exists but is invalid

    """
    if config_path is None:
        config_path = get_config_path()

    # Start with defaults
    config = CO2MonitorConfig()

    if not config_path.exists():
        return config

    try:
        with open(config_path, "rb") as f:
            data = tomllib.load(f)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"Failed to load config from {config_path}: {e}") from e

    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigurationError(f"unknown sections in {config_path}: {', '.join(sorted(unknown))}")

    for name in _SECTIONS:
        if name in data:
            setattr(config, name, _merge_section(getattr(config, name), data[name], name))

    return config


def save_config(config: CO2MonitorConfig, config_path: Path | None = None) -> None:
    """Save configuration to file.

    Args:
        config: Configuration to save
        config_path: Path to save to. If None, uses default location.

    Raises:
        ConfigurationError: If unable to save config

    """
    if config_path is None:
        config_path = get_config_path()

    document = tomlkit.document()
    document.add(tomlkit.comment("co2monitor configuration"))
    for name in _SECTIONS:
        document.add(name, asdict(getattr(config, name)))

    try:
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(tomlkit.dumps(document), encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Failed to save config to {config_path}: {e}") from e


def config_issues(config: CO2MonitorConfig) -> list[str]:
    """Check settings against the modules' preconditions."""
    issues = []
    if not 0 < config.monitor.alpha <= 0.5:
        issues.append("monitor.alpha must lie in (0, 0.5]")
    if config.monitor.k < 3:
        issues.append("monitor.k must be at least 3")
    if config.monitor.horizon < 1:
        issues.append("monitor.horizon must be at least 1")
    if config.calibration.replications < 1:
        issues.append("calibration.replications must be at least 1")
    if config.calibration.threads < 1 or config.calibration.threads > 256:
        issues.append("calibration.threads should be between 1 and 256")
    if config.calibration.seed < 0:
        issues.append("calibration.seed must be non-negative")
    lags = config.diagnostics.lags
    if not lags or any(isinstance(lag, bool) or not isinstance(lag, int) or lag < 1 for lag in lags):
        issues.append("diagnostics.lags must be a non-empty list of positive integers")
    if not 0 <= config.simulation.g < 1:
        issues.append("simulation.g must lie in [0, 1)")
    if config.output.format not in ("text", "csv"):
        issues.append("output.format must be 'text' or 'csv'")
    return issues


def _coerce(value: str) -> Any:
    lowered = value.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for kind in (int, float):
        try:
            return kind(value)
        except ValueError:
            continue
    return value


def load_run_config(path: Path, allowed: set[str] | None = None) -> dict[str, Any]:
    """Read a ``key=value`` run-config file.

    Blank lines and ``#`` comments are ignored; values are coerced to bool,
    int or float where they parse.

    Args:
        path: File to read
        allowed: Accepted keys; any other key is an error when given

    Returns:
        Mapping of keys (dashes normalized to underscores) to values

    Raises:
        ConfigurationError: On unreadable files, malformed lines or unknown keys

    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read run config {path}: {e}") from e

    values: dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"{path}:{number}: expected key=value, got {raw.strip()!r}")
        key = key.strip().replace("-", "_")
        if allowed is not None and key not in allowed:
            raise ConfigurationError(f"{path}:{number}: unknown key '{key}'")
        values[key] = _coerce(value.strip())
    return values


SAMPLE_CONFIG = """\
# co2monitor configuration file

[diagnostics]
# 5% critical values used for the reject/accept columns
jb = 5.99
ks = 0.18
ad = 0.74
lags = [1, 5]

[diagnostics.q]
"1" = 3.84
"5" = 11.07

[calibration]
# Monte Carlo replications and master seed for boundary constants
replications = 100000
seed = 20210301

# Boundary function: "sqrt", "linear", "sqrt_log"
boundary = "sqrt"

# Walk length used for an indefinite horizon
indefinite_horizon = 1000

# Where calibrated constants are cached
cache_file = "~/.cache/co2monitor/constants.txt"

# Worker threads (results do not depend on this)
threads = 1

[monitor]
k = 61
alpha = 0.05
horizon = 30
gaussianity_check = true

# Calendar year of the first monitored observation (table headers)
start_year = 2020

[simulation]
replications = 10000
e_base = 9.6
g = 0.0692

[output]
# "text" or "csv"
format = "text"
decimals = 2
"""


def create_sample_config(config_path: Path | None = None) -> None:
    """Create a sample configuration file.

    Args:
        config_path: Path to save sample config. If None, uses default location.

    """
    if config_path is None:
        config_path = Path.home() / CONFIG_NAME

    try:
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(SAMPLE_CONFIG, encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"Failed to create sample config at {config_path}: {e}") from e
