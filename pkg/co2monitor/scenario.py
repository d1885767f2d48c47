"""Size, power and detection-time experiments.

Reported fossil emissions decline geometrically from a baseline level while a
fraction m of baseline emissions is in fact never abated. The gap between
reported and actual emissions enters the budget imbalance as a negative
wedge from the break year on. Each replication simulates a stationary AR(1)
budget imbalance, adds the wedge, and runs the full monitor over synthetic
vintages that each extend the previous one by a year (no revisions).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy import signal

from .calibration import DEFAULT_REPLICATIONS, DEFAULT_SEED, BoundarySpec, calibrate
from .exceptions import CO2MonitorError, InvalidParameterError
from .flux_data import imbalance_series
from .monitor import Decision, MonitorConfig, init_monitor, step_series
from .rng import STREAM_NOISE, chunk_ranges, replication_stream
from .validation import (
    validate_alpha,
    validate_fraction,
    validate_horizon,
    validate_replications,
    validate_seed,
    validate_sigma,
    validate_stationary,
    validate_threads,
    validate_window,
)

logger = logging.getLogger(__name__)

# (phi, sigma). DGP1 is the AR(1) fit to the 2020 release; DGP2 halves phi and
# DGP3 halves sigma (inferred variants).
DGP_PRESETS: dict[int, tuple[float, float]] = {
    1: (0.35, 0.72),
    2: (0.175, 0.72),
    3: (0.35, 0.36),
}

DEFAULT_E_BASE = 9.6
DEFAULT_ABATEMENT = 0.0692
DETECTION_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


def dgp_preset(number: int) -> tuple[float, float]:
    """Return ``(phi, sigma)`` for DGP 1, 2 or 3."""
    try:
        return DGP_PRESETS[number]
    except KeyError:
        raise InvalidParameterError(f"unknown DGP {number}; choose 1, 2 or 3") from None


@dataclass(frozen=True)
class ScenarioSpec:
    """Configuration of one simulation experiment.

    Attributes:
        phi: AR(1) coefficient of the faithful budget imbalance
        sigma: Innovation standard deviation (GtC/yr)
        k: Initial window length
        horizon: Monitoring horizon T (years)
        alpha: Nominal size
        g: Annual abatement fraction of reported emissions
        m: Misreporting parameter
        e_base: Baseline-year fossil emissions (GtC/yr)
        tau_offset: Monitored year in which misreporting starts (1 = first year)
        replications: Number of simulated histories
        seed: Master seed for the simulated noise
        f_kind: Boundary function
        calibration_replications: Replications used to calibrate the boundary
        calibration_seed: Seed used to calibrate the boundary
    """

    phi: float = DGP_PRESETS[1][0]
    sigma: float = DGP_PRESETS[1][1]
    k: int = 61
    horizon: int = 30
    alpha: float = 0.05
    g: float = DEFAULT_ABATEMENT
    m: float = 0.0
    e_base: float = DEFAULT_E_BASE
    tau_offset: int = 1
    replications: int = 10_000
    seed: int = DEFAULT_SEED
    f_kind: str = "sqrt"
    calibration_replications: int = DEFAULT_REPLICATIONS
    calibration_seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        validate_stationary(self.phi)
        validate_sigma(self.sigma)
        validate_window(self.k)
        validate_horizon(self.horizon)
        if math.isinf(self.horizon):
            raise InvalidParameterError("simulation needs a finite horizon", code="INVALID_HORIZON")
        validate_alpha(self.alpha)
        validate_fraction(self.g, "g", upper_open=True)
        validate_fraction(self.m, "m")
        validate_replications(self.replications)
        validate_seed(self.seed)
        if self.tau_offset < 1:
            raise InvalidParameterError(f"tau_offset must be at least 1, got {self.tau_offset}")


@dataclass
class PowerReport:
    """Aggregated outcome of a simulation experiment.

    Attributes:
        spec: The experiment configuration
        rejection_rate: Fraction of completed replications that rejected within T
        mean_detection_time: Mean years to rejection among rejecting replications
        detection_quantiles: Quantiles of the detection time among rejecting replications
        detection_times: Per replication, years to rejection or None
        failures: Replication index to error code for replications that failed
    """

    spec: ScenarioSpec
    rejection_rate: float
    mean_detection_time: float
    detection_quantiles: dict[float, float] = field(default_factory=dict)
    detection_times: list[int | None] = field(default_factory=list)
    failures: dict[int, str] = field(default_factory=dict)

    @property
    def rejections(self) -> int:
        return sum(1 for t in self.detection_times if t is not None)

    def summary(self) -> dict[str, float | int]:
        """Flat summary suitable for a table row."""
        row: dict[str, float | int] = {
            "m": self.spec.m,
            "alpha": self.spec.alpha,
            "phi": self.spec.phi,
            "sigma": self.spec.sigma,
            "replications": self.spec.replications,
            "rejection_rate": self.rejection_rate,
            "mean_detection_time": self.mean_detection_time,
            "failures": len(self.failures),
        }
        for q, value in self.detection_quantiles.items():
            row[f"q{int(round(q * 100))}"] = value
        return row

    def to_frame(self) -> pd.DataFrame:
        """Per-replication detection times (empty when no rejection)."""
        return pd.DataFrame(
            {
                "replication": range(len(self.detection_times)),
                "detection_time": pd.array(self.detection_times, dtype="Int64"),
                "failure": [self.failures.get(i, "") for i in range(len(self.detection_times))],
            }
        )


def reported_path(e_base: float, g: float, horizon: int) -> np.ndarray:
    """Reported emissions ``e_base * (1 - g)**t`` for t = 1..horizon."""
    validate_fraction(g, "g", upper_open=True)
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be at least 1, got {horizon}")
    t = np.arange(1, horizon + 1, dtype=float)
    return e_base * (1.0 - g) ** t


def actual_path(reported: np.ndarray, m: float, e_base: float) -> np.ndarray:
    """Actual emissions ``(1 - m) * reported + m * e_base``."""
    validate_fraction(m, "m")
    return (1.0 - m) * np.asarray(reported, dtype=float) + m * e_base


def misreporting_wedge(spec: ScenarioSpec) -> np.ndarray:
    """Reported minus actual emissions per monitored year; zero before ``tau_offset``."""
    reported = reported_path(spec.e_base, spec.g, spec.horizon)
    wedge = reported - actual_path(reported, spec.m, spec.e_base)
    wedge[: spec.tau_offset - 1] = 0.0
    return wedge


def simulate_ar1(phi: float, sigma: float, length: int, stream: np.random.Generator) -> np.ndarray:
    """Simulate a stationary zero-mean AR(1) path of ``length`` values.

    The pre-sample value is drawn from the stationary law
    ``N(0, sigma**2 / (1 - phi**2))``.
    """
    validate_stationary(phi)
    validate_sigma(sigma, allow_zero=True)
    u0 = stream.standard_normal() * sigma / math.sqrt(1.0 - phi**2)
    noise = sigma * stream.standard_normal(length)
    path, _ = signal.lfilter([1.0], [1.0, -phi], noise, zi=[phi * u0])
    return path


def _replicate(
    spec: ScenarioSpec, config: MonitorConfig, wedge: np.ndarray, index: int
) -> int | None:
    stream = replication_stream(spec.seed, index, STREAM_NOISE)
    y = simulate_ar1(spec.phi, spec.sigma, spec.k + spec.horizon, stream)
    y[spec.k :] += wedge
    label = f"sim{index}"
    state = init_monitor(config, imbalance_series(y[: spec.k], label))
    for n in range(spec.k + 1, spec.k + spec.horizon + 1):
        state, decision = step_series(state, imbalance_series(y[:n], label))
        if decision is Decision.REJECT:
            return len(state.steps)
    return None


def _run_rows(
    spec: ScenarioSpec, config: MonitorConfig, wedge: np.ndarray, rows: range
) -> list[tuple[int | None, str | None]]:
    out: list[tuple[int | None, str | None]] = []
    for index in rows:
        try:
            out.append((_replicate(spec, config, wedge, index), None))
        except CO2MonitorError as e:
            logger.debug("replication %d failed: %s", index, e)
            out.append((None, e.code))
    return out


def calibrate_for(spec: ScenarioSpec, threads: int = 1) -> BoundarySpec:
    """Calibrate the boundary an experiment uses."""
    return calibrate(
        spec.horizon,
        spec.alpha,
        spec.f_kind,
        spec.calibration_replications,
        spec.calibration_seed,
        threads,
    )


def run_experiment(
    spec: ScenarioSpec, boundary: BoundarySpec | None = None, threads: int = 1
) -> PowerReport:
    """Run a full-pipeline Monte Carlo experiment.

    Args:
        spec: Experiment configuration
        boundary: Calibrated boundary for ``(spec.horizon, spec.alpha)``;
            calibrated from ``spec`` when omitted
        threads: Worker threads (does not affect the result)

    Returns:
        PowerReport

    """
    validate_threads(threads)
    boundary = boundary or calibrate_for(spec, threads)
    if boundary.horizon != spec.horizon or boundary.alpha != spec.alpha:
        raise InvalidParameterError("boundary was calibrated for a different horizon or alpha")

    config = MonitorConfig(k=spec.k, boundary=boundary, gaussianity_check=False)
    wedge = misreporting_wedge(spec)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        chunks = executor.map(
            lambda rows: _run_rows(spec, config, wedge, rows),
            chunk_ranges(spec.replications, threads),
        )
        outcomes = [item for chunk in chunks for item in chunk]

    detection_times = [time for time, _ in outcomes]
    failures = {i: code for i, (_, code) in enumerate(outcomes) if code is not None}
    completed = len(outcomes) - len(failures)
    detected = np.array([t for t in detection_times if t is not None], dtype=float)

    rejection_rate = detected.size / completed if completed else math.nan
    mean_time = float(detected.mean()) if detected.size else math.nan
    quantiles = (
        {q: float(v) for q, v in zip(DETECTION_QUANTILES, np.quantile(detected, DETECTION_QUANTILES), strict=True)}
        if detected.size
        else {}
    )
    logger.info(
        "m=%.3f alpha=%.2f: rejection rate %.4f, mean detection %.2f years, %d failures",
        spec.m,
        spec.alpha,
        rejection_rate,
        mean_time,
        len(failures),
    )
    return PowerReport(
        spec=spec,
        rejection_rate=rejection_rate,
        mean_detection_time=mean_time,
        detection_quantiles=quantiles,
        detection_times=detection_times,
        failures=failures,
    )


def power_sweep(
    spec: ScenarioSpec,
    ms: Sequence[float],
    boundary: BoundarySpec | None = None,
    threads: int = 1,
) -> pd.DataFrame:
    """Run ``run_experiment`` for each misreporting level, sharing one boundary."""
    boundary = boundary or calibrate_for(spec, threads)
    rows = [run_experiment(replace(spec, m=m), boundary, threads).summary() for m in ms]
    return pd.DataFrame(rows).set_index("m")


def parse_sweep(text: str) -> list[float]:
    """Parse ``start:step:stop`` (inclusive) into a list of values."""
    try:
        start, step, stop = (float(part) for part in text.split(":"))
    except ValueError:
        raise InvalidParameterError(f"sweep must look like start:step:stop, got {text!r}") from None
    if step <= 0 or stop < start:
        raise InvalidParameterError(f"empty sweep {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]
