"""Sequential CUSUM monitoring of the budget imbalance.

Each year a new vintage arrives. The null model is refit on the first K
observations of that vintage, the newest observation is turned into a
standardized innovation, and the innovation is added to the running CUSUM.
The monitor rejects the first time the CUSUM falls to or below ``-C``, where
C is the calibrated boundary for the number of monitored years so far.
Innovations are frozen when computed: later revisions never change them.
"""

from __future__ import annotations

import io
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from .arma import arma_residuals, fit_ar1, fit_arma
from .calibration import BoundarySpec, boundary_value
from .diagnostics import diagnose, gaussianity_passes
from .exceptions import (
    AlreadyTerminalError,
    GaussianityWarning,
    NotCalibratedError,
    StateFileError,
    WindowMismatchError,
)
from .flux_data import BudgetImbalanceSeries, Vintage, budget_imbalance
from .validation import INDEFINITE, validate_window

logger = logging.getLogger(__name__)

STATE_VERSION = "1"
STEP_COLUMNS = [
    "year",
    "n",
    "phi_hat",
    "sigma_hat",
    "innovation",
    "z",
    "boundary",
    "decision",
    "gauss_flag",
]


class Decision(str, Enum):
    """Outcome of one monitoring step."""

    CONTINUE = "continue"
    REJECT = "reject"


class Status(str, Enum):
    """Lifecycle of a monitor."""

    RUNNING = "running"
    REJECTED = "rejected"
    HORIZON_EXHAUSTED = "horizon_exhausted"


GAUSS_PASS = "pass"
GAUSS_WARN = "warn"
GAUSS_OFF = "off"


@dataclass(frozen=True)
class MonitorConfig:
    """Monitoring configuration.

    Attributes:
        k: Length of the initial, break-free window
        boundary: Calibrated boundary (horizon, size and constant)
        model_orders: ARMA orders of the null model
        gaussianity_check: Run the Gaussianity battery on each refit
    """

    k: int
    boundary: BoundarySpec
    model_orders: tuple[int, int] = (1, 0)
    gaussianity_check: bool = True

    def __post_init__(self) -> None:
        validate_window(self.k)
        if not self.boundary.calibrated:
            raise NotCalibratedError("monitor needs a calibrated boundary")

    @property
    def horizon(self) -> float:
        return self.boundary.horizon


@dataclass(frozen=True)
class StepRecord:
    """Everything computed in one monitored year."""

    year: int
    n: int
    phi_hat: float
    sigma_hat: float
    innovation: float
    z: float
    boundary: float
    decision: Decision
    gauss_flag: str


@dataclass(frozen=True)
class MonitorState:
    """Immutable monitor state; ``step`` returns a new one."""

    config: MonitorConfig
    steps: tuple[StepRecord, ...] = ()
    label: str = ""
    first_year: int = 1959
    init_phi: float = math.nan
    init_sigma: float = math.nan
    init_gauss_flag: str = GAUSS_OFF

    @property
    def status(self) -> Status:
        if self.steps and self.steps[-1].decision is Decision.REJECT:
            return Status.REJECTED
        if len(self.steps) >= self.config.horizon:
            return Status.HORIZON_EXHAUSTED
        return Status.RUNNING

    @property
    def z(self) -> float:
        return self.steps[-1].z if self.steps else 0.0

    @property
    def rejection_year(self) -> int | None:
        return self.steps[-1].year if self.status is Status.REJECTED else None

    @property
    def expected_length(self) -> int:
        """Vintage length required by the next step."""
        return self.config.k + len(self.steps) + 1

    def status_text(self) -> str:
        if self.status is Status.REJECTED:
            return f"rejected:{self.rejection_year}"
        return self.status.value


@dataclass(frozen=True, eq=False)
class _Refit:
    phi: float
    sigma: float
    residuals: np.ndarray
    innovation: float


def _as_series(data: Vintage | BudgetImbalanceSeries) -> BudgetImbalanceSeries:
    return budget_imbalance(data) if isinstance(data, Vintage) else data


def _refit(config: MonitorConfig, y: np.ndarray) -> _Refit:
    """Fit the null model on y[:K] and standardize the last value of y."""
    window = y[: config.k]
    p, q = config.model_orders
    if (p, q) == (1, 0):
        fit = fit_ar1(window)
        innovation = fit.innovation(float(y[-1]), float(y[-2])) if y.size > config.k else math.nan
        return _Refit(fit.phi, fit.sigma, fit.residuals, innovation)

    arma = fit_arma(window, p, q)
    resid = arma_residuals(arma, y) / arma.sigma
    phi = float(arma.phi[0]) if p else 0.0
    innovation = float(resid[-1]) if y.size > config.k else math.nan
    # the first max(p, q) residuals depend on zero pre-sample values
    return _Refit(phi, arma.sigma, resid[max(p, q) : config.k], innovation)


def _gauss_flag(config: MonitorConfig, residuals: np.ndarray, where: str) -> str:
    if not config.gaussianity_check:
        return GAUSS_OFF
    if gaussianity_passes(diagnose(residuals, lags=())):
        return GAUSS_PASS
    warnings.warn(
        f"{where}: standardized residuals of the initial window fail the Gaussianity battery",
        GaussianityWarning,
        stacklevel=3,
    )
    return GAUSS_WARN


def init_monitor(config: MonitorConfig, initial: Vintage | BudgetImbalanceSeries) -> MonitorState:
    """Start monitoring from a vintage that covers exactly the initial window.

    Args:
        config: Monitoring configuration
        initial: Vintage (or its budget imbalance) of length K

    Returns:
        State with no steps and the initial refit stored

    Raises:
        WindowMismatchError: If the vintage length differs from K

    """
    series = _as_series(initial)
    if len(series) != config.k:
        raise WindowMismatchError(
            f"initial vintage {series.label} has {len(series)} observations, K is {config.k}"
        )

    refit = _refit(config, series.values)
    flag = _gauss_flag(config, refit.residuals, series.label)
    logger.info(
        "monitor initialized on %s: phi=%.4f sigma=%.4f gaussianity=%s",
        series.label,
        refit.phi,
        refit.sigma,
        flag,
    )
    return MonitorState(
        config=config,
        label=series.label,
        first_year=series.years[0],
        init_phi=refit.phi,
        init_sigma=refit.sigma,
        init_gauss_flag=flag,
    )


def step(state: MonitorState, vintage: Vintage | BudgetImbalanceSeries) -> tuple[MonitorState, Decision]:
    """Process the next annual vintage.

    The null model is refit on the vintage's first K observations, the newest
    observation is standardized using the vintage's own (possibly revised)
    previous value, and the innovation is added to the CUSUM.

    Args:
        state: Current, running state
        vintage: Vintage exactly one year longer than the previous one

    Returns:
        Tuple of the new state and this year's decision

    Raises:
        AlreadyTerminalError: If the monitor has rejected or exhausted its horizon
        WindowMismatchError: If the vintage has the wrong length or start year

    """
    return step_series(state, _as_series(vintage))


def step_series(state: MonitorState, series: BudgetImbalanceSeries) -> tuple[MonitorState, Decision]:
    """``step`` on a pre-computed budget imbalance series."""
    if state.status is not Status.RUNNING:
        raise AlreadyTerminalError(f"monitor is {state.status_text()}; no further steps accepted")

    if len(series) != state.expected_length:
        raise WindowMismatchError(
            f"vintage {series.label} has {len(series)} observations, expected {state.expected_length}"
        )
    if series.years[0] != state.first_year:
        raise WindowMismatchError(
            f"vintage {series.label} starts in {series.years[0]}, monitor data start in {state.first_year}"
        )

    config = state.config
    refit = _refit(config, series.values)
    flag = _gauss_flag(config, refit.residuals, series.label)
    t = len(state.steps) + 1
    z = state.z + refit.innovation
    boundary = boundary_value(config.boundary, t)
    decision = Decision.REJECT if z <= -boundary else Decision.CONTINUE

    record = StepRecord(
        year=series.years[-1],
        n=len(series),
        phi_hat=refit.phi,
        sigma_hat=refit.sigma,
        innovation=refit.innovation,
        z=z,
        boundary=boundary,
        decision=decision,
        gauss_flag=flag,
    )
    logger.info(
        "%d: innovation=%.4f Z=%.4f C=%.4f -> %s",
        record.year,
        record.innovation,
        record.z,
        record.boundary,
        decision.value,
    )
    return replace(state, steps=state.steps + (record,)), decision


@dataclass
class StatusReport:
    """Tabular view of a monitor state."""

    table: pd.DataFrame
    status: str
    detection_year: int | None = None
    summary: str = ""
    notes: list[str] = field(default_factory=list)


def steps_frame(state: MonitorState) -> pd.DataFrame:
    """Per-step records as a DataFrame with the state-file columns."""
    rows = [
        [
            s.year,
            s.n,
            s.phi_hat,
            s.sigma_hat,
            s.innovation,
            s.z,
            s.boundary,
            s.decision.value,
            s.gauss_flag,
        ]
        for s in state.steps
    ]
    return pd.DataFrame(rows, columns=STEP_COLUMNS)


def status_report(state: MonitorState) -> StatusReport:
    """Summarize a monitor: per-year table plus a status line."""
    table = steps_frame(state)
    status = state.status_text()
    config = state.config
    summary = (
        f"status={status} steps={len(state.steps)} Z={state.z:.2f} "
        f"alpha={config.boundary.alpha} T={_format_horizon(config.horizon)} K={config.k}"
    )
    if state.rejection_year is not None:
        summary += f" detection_year={state.rejection_year}"

    notes = [
        f"{s.year}: phi_hat={s.phi_hat:.3f} outside (-1, 1)" for s in state.steps if abs(s.phi_hat) >= 1.0
    ]
    notes += [f"{s.year}: Gaussianity battery failed" for s in state.steps if s.gauss_flag == GAUSS_WARN]
    if state.init_gauss_flag == GAUSS_WARN:
        notes.insert(0, "initial window: Gaussianity battery failed")

    return StatusReport(
        table=table,
        status=status,
        detection_year=state.rejection_year,
        summary=summary,
        notes=notes,
    )


def _format_horizon(horizon: float) -> str:
    return "inf" if horizon == INDEFINITE else str(int(horizon))


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def dumps_state(state: MonitorState) -> str:
    """Serialize a state to the line-oriented state-file format."""
    config = state.config
    spec = config.boundary
    p, q = config.model_orders
    header = [
        f"version={STATE_VERSION}",
        f"alpha={spec.alpha!r}",
        f"T={_format_horizon(spec.horizon)}",
        f"K={config.k}",
        f"f={spec.f_kind}",
        f"c={_fmt(spec.c)}",  # type: ignore[arg-type]
        f"status={state.status_text()}",
        f"B={spec.replications}",
        f"seed={spec.seed}",
        f"label={state.label}",
        f"first_year={state.first_year}",
        f"p={p}",
        f"q={q}",
        f"gaussianity_check={'true' if config.gaussianity_check else 'false'}",
        f"init_phi={_fmt(state.init_phi)}",
        f"init_sigma={_fmt(state.init_sigma)}",
        f"init_gauss_flag={state.init_gauss_flag}",
    ]
    body = steps_frame(state).to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return "\n".join(header) + "\n" + body


def save_state(state: MonitorState, path: Path) -> None:
    """Write a state file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_state(state), encoding="utf-8")


def loads_state(text: str) -> MonitorState:
    """Parse a state file and check its internal consistency.

    Raises:
        StateFileError: If the file is malformed, the CUSUM column disagrees
            with the innovations, or the stored status is inconsistent

    """
    lines = text.splitlines()
    try:
        split = next(i for i, line in enumerate(lines) if line.startswith("year,"))
    except StopIteration:
        raise StateFileError("state file has no step table header") from None

    header: dict[str, str] = {}
    for line in lines[:split]:
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise StateFileError(f"bad header line {line!r}")
        header[key.strip()] = value.strip()

    if header.get("version") != STATE_VERSION:
        raise StateFileError(f"unsupported state file version {header.get('version')!r}")

    try:
        horizon = INDEFINITE if header["T"] == "inf" else float(int(header["T"]))
        spec = BoundarySpec(
            horizon=horizon,
            alpha=float(header["alpha"]),
            f_kind=header["f"],
            c=float(header["c"]),
            replications=int(header.get("B", "100000")),
            seed=int(header.get("seed", "0")),
            simulated_horizon=0 if horizon == INDEFINITE else int(horizon),
        )
        config = MonitorConfig(
            k=int(header["K"]),
            boundary=spec,
            model_orders=(int(header.get("p", "1")), int(header.get("q", "0"))),
            gaussianity_check=header.get("gaussianity_check", "true") == "true",
        )
        frame = pd.read_csv(
            io.StringIO("\n".join(lines[split:])),
            dtype={"decision": str, "gauss_flag": str},
            float_precision="round_trip",
        )
        steps = tuple(
            StepRecord(
                year=int(row.year),
                n=int(row.n),
                phi_hat=float(row.phi_hat),
                sigma_hat=float(row.sigma_hat),
                innovation=float(row.innovation),
                z=float(row.z),
                boundary=float(row.boundary),
                decision=Decision(row.decision),
                gauss_flag=str(row.gauss_flag),
            )
            for row in frame.itertuples(index=False)
        )
        state = MonitorState(
            config=config,
            steps=steps,
            label=header.get("label", ""),
            first_year=int(header.get("first_year", "1959")),
            init_phi=float(header.get("init_phi", "nan")),
            init_sigma=float(header.get("init_sigma", "nan")),
            init_gauss_flag=header.get("init_gauss_flag", GAUSS_OFF),
        )
    except (KeyError, ValueError) as e:
        raise StateFileError(f"malformed state file: {e}") from e

    z = 0.0
    for record in state.steps:
        z += record.innovation
        if z != record.z:
            raise StateFileError(f"{record.year}: stored Z does not equal the sum of innovations")
    if any(s.decision is Decision.REJECT for s in state.steps[:-1]):
        raise StateFileError("steps recorded after a rejection")
    if header.get("status") != state.status_text():
        raise StateFileError(
            f"stored status {header.get('status')!r} disagrees with steps ({state.status_text()})"
        )
    return state


def load_state(path: Path) -> MonitorState:
    """Read a state file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise StateFileError(f"cannot read state file {path}: {e}") from e
    return loads_state(text)
