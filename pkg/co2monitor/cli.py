"""CLI interface for co2monitor."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from types import SimpleNamespace
from typing import Any

import numpy as np
import pandas as pd
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from . import __version__
from .config_cli import config_app
from .exceptions import EXIT_REJECT, CO2MonitorError, ConfigurationError, InvalidParameterError
from .settings import CO2MonitorConfig, load_config, load_run_config

app = typer.Typer(
    name="co2monitor",
    help="Sequential monitoring of the global carbon budget imbalance",
    no_args_is_help=False,
)
monitor_app = typer.Typer(
    name="monitor",
    help="Run the sequential test one annual vintage at a time",
    no_args_is_help=True,
)

# Add subcommand groups
app.add_typer(config_app)
app.add_typer(monitor_app)

console = Console()
err_console = Console(stderr=True)

# Global settings instance
_config: CO2MonitorConfig | None = None


class OutputFormat(str, Enum):
    """Output formats for tabular results."""

    TEXT = "text"
    CSV = "csv"


def get_config(config_path: Path | None = None) -> CO2MonitorConfig:
    """Get the global settings, loading them if necessary."""
    global _config
    if _config is None:
        _config = load_config(config_path)
    return _config


@contextmanager
def _errors() -> Iterator[None]:
    """Map library errors to ``error: CODE: detail`` and the family's exit code."""
    try:
        yield
    except CO2MonitorError as e:
        err_console.print(e.one_line(), markup=False, highlight=False, soft_wrap=True)
        raise typer.Exit(e.exit_code) from e


def _convert(name: str, value: Any, default: Any) -> Any:
    if default is None or type(value) is type(default):
        return value
    try:
        if isinstance(default, bool):
            raise ValueError(value)
        if isinstance(default, int) and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return type(default)(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"run config key '{name}': cannot use {value!r}") from None


def _resolve(config_file: Path | None, **options: tuple[Any, Any]) -> SimpleNamespace:
    """Merge ``(flag, default)`` pairs with a run-config file; flags win over the file."""
    run = load_run_config(config_file, allowed=set(options)) if config_file else {}
    values = {}
    for name, (flag, default) in options.items():
        if flag is not None:
            values[name] = flag.value if isinstance(flag, Enum) else flag
        elif name in run:
            values[name] = _convert(name, run[name], default)
        else:
            values[name] = default
    if values.get("format") not in (None, "text", "csv"):
        raise ConfigurationError(f"format must be 'text' or 'csv', got {values['format']!r}")
    return SimpleNamespace(**values)


def _parse_horizon(text: str) -> float:
    if text.strip().lower() in ("inf", "infinite", "indefinite"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        raise InvalidParameterError(
            f"horizon must be a positive integer or 'inf', got {text!r}", code="INVALID_HORIZON"
        ) from None


def _parse_floats(text: str, name: str) -> list[float]:
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise InvalidParameterError(f"{name} must be a comma-separated list of numbers") from None


def _parse_counts(text: Any, name: str, *, size: int | None = None, minimum: int = 0) -> list[int]:
    """Parse a comma-separated list of integers no smaller than ``minimum``."""
    values = _parse_floats(str(text), name)
    if (size is not None and len(values) != size) or not values:
        expected = f"exactly {size} integers" if size is not None else "a list of integers"
        raise InvalidParameterError(f"{name} must be {expected}, got {text!r}")
    if any(not v.is_integer() or v < minimum for v in values):
        raise InvalidParameterError(f"{name} takes integers >= {minimum}, got {text!r}")
    return [int(v) for v in values]



def _join(values: Any) -> str:
    return ",".join(str(v) for v in values)


def _cell(value: Any, decimals: int | None) -> str:
    if value is None or value is pd.NA:
        return "-"
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "-"
        return str(value) if decimals is None else f"{value:.{decimals}f}"
    return str(value)


def _frame_table(frame: pd.DataFrame, title: str, decimals: int) -> Table:
    index_columns: list[str] = []
    if frame.index.names != [None]:
        index_columns = [str(name) for name in frame.index.names]
        frame = frame.reset_index()

    table = Table(title=title)
    for column in frame.columns:
        is_index = str(column) in index_columns
        table.add_column(str(column), style="cyan" if is_index else None, justify="left" if is_index else "right")
    for row in frame.itertuples(index=False):
        table.add_row(
            *(
                _cell(value, None if str(column) in index_columns else decimals)
                for column, value in zip(frame.columns, row, strict=True)
            )
        )
    return table


def _to_csv(frame: pd.DataFrame) -> str:
    index = frame.index.names != [None]
    return frame.to_csv(index=index, float_format="%.17g", lineterminator="\n")


def _render(frame: pd.DataFrame, title: str, opts: SimpleNamespace, output: Path | None) -> None:
    """Write a table as CSV (17 significant digits) or as a rounded rich table."""
    if opts.format == OutputFormat.CSV.value:
        text = _to_csv(frame)
        if output is None:
            typer.echo(text, nl=False)
        else:
            output.write_text(text, encoding="utf-8")
        return

    table = _frame_table(frame, title, opts.decimals)
    if output is None:
        console.print(table)
    else:
        with open(output, "w", encoding="utf-8") as handle:
            Console(file=handle, width=240, color_system=None).print(table)


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )
    logging.captureWarnings(True)


def _version_callback(value: bool) -> None:
    if value:
        console.print(f"co2monitor {__version__}")
        raise typer.Exit()


FormatOption = typer.Option(None, "--format", help="Output format: text or csv [default: settings]")
OutputOption = typer.Option(None, "--output", "-o", help="Write the result to this file")
RunConfigOption = typer.Option(None, "--config", "-c", help="Run config file of key=value lines")
ThreadsOption = typer.Option(None, "--threads", "-j", help="Worker threads; results do not depend on it")
SeedOption = typer.Option(None, "--seed", help="Master seed [default: settings, 20210301]")
LagsOption = typer.Option(None, "--lags", help="Ljung-Box lags, comma-separated [default: settings, 1,5]")


@app.command()
def ingest(
    data: Path = typer.Argument(..., help="Vintage CSV file"),
    label: str | None = typer.Option(None, "--label", "-l", help="Vintage label [default: file stem]"),
    compare: Path | None = typer.Option(
        None, "--compare", help="Older vintage; show revisions of the overlapping years"
    ),
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
    config_file: Path | None = RunConfigOption,
) -> None:
    """Read a vintage, check it, and show its fluxes with the budget imbalance."""
    from .flux_data import budget_imbalance, read_vintage, revisions

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            label=(label, None),
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        vintage = read_vintage(data, None if opts.label is None else str(opts.label))
        if compare is not None:
            older = read_vintage(compare)
            frame = revisions(older, vintage)
            title = f"Revisions {older.label} → {vintage.label}"
        else:
            frame = vintage.to_frame()
            frame["b_im"] = budget_imbalance(vintage).values
            title = f"{vintage.label}: {vintage.first_year}-{vintage.last_year} (GtC/yr)"
        _render(frame, title, opts, output)


@app.command()
def diagnose(
    data: list[Path] = typer.Argument(..., help="One or more vintage CSV files"),
    lags: str | None = LagsOption,
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
    config_file: Path | None = RunConfigOption,
) -> None:
    """Summary statistics and diagnostics of the budget imbalance and its AR(1) residuals."""
    from .diagnostics import imbalance_table
    from .flux_data import budget_imbalance, read_vintage

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            lags=(lags, _join(config.diagnostics.lags)),
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        critical = config.diagnostics.critical_values()
        lag_list = _parse_counts(opts.lags, "--lags", minimum=1)
        frames = []
        for path in data:
            series = budget_imbalance(read_vintage(path))
            frames.append(imbalance_table(series.label, series.values, critical, lag_list))
        _render(pd.concat(frames), "Budget imbalance diagnostics", opts, output)


@app.command()
def fit(
    data: Path = typer.Argument(..., help="Vintage CSV file"),
    k: int | None = typer.Option(None, "--k", "-k", help="Fit on the first K observations [default: all]"),
    p: int | None = typer.Option(None, "--p", help="Autoregressive order [default: 1]"),
    q: int | None = typer.Option(None, "--q", help="Moving-average order [default: 0]"),
    select: str | None = typer.Option(
        None, "--select", help="Choose orders by BIC over 0..P_MAX x 0..Q_MAX, given as P_MAX,Q_MAX"
    ),
    lags: str | None = LagsOption,
    threads: int | None = ThreadsOption,
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
    config_file: Path | None = RunConfigOption,
) -> None:
    """Fit the zero-mean null model and diagnose its residuals."""
    from .arma import arma_residuals, bic_select, fit_ar1, fit_arma
    from .diagnostics import diagnose as run_diagnostics
    from .exceptions import TooFewObservationsError
    from .flux_data import budget_imbalance, read_vintage

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            k=(k, None),
            p=(p, 1),
            q=(q, 0),
            select=(select, None),
            lags=(lags, _join(config.diagnostics.lags)),
            threads=(threads, config.calibration.threads),
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        series = budget_imbalance(read_vintage(data))
        window = len(series) if opts.k is None else int(opts.k)
        if window > len(series):
            raise TooFewObservationsError(f"K={window} exceeds the {len(series)} observations of {series.label}")
        y = series.values[:window]

        order = (int(opts.p), int(opts.q))
        if opts.select is not None:
            p_max, q_max = _parse_counts(opts.select, "--select", size=2)
            order = bic_select(y, p_max, q_max, max_workers=opts.threads)

        rows: dict[str, float] = {"p": order[0], "q": order[1], "n": window}
        if order == (1, 0):
            ar1 = fit_ar1(y)
            rows.update(phi_1=ar1.phi, sigma=ar1.sigma)
            residuals = ar1.residuals
        else:
            arma = fit_arma(y, *order)
            rows.update({f"phi_{i + 1}": v for i, v in enumerate(arma.phi)})
            rows.update({f"psi_{j + 1}": v for j, v in enumerate(arma.psi)})
            rows.update(sigma=arma.sigma, loglik=arma.loglik, bic=arma.bic)
            residuals = arma_residuals(arma, y) / arma.sigma

        report = run_diagnostics(
            residuals,
            lags=_parse_counts(opts.lags, "--lags", minimum=1),
            critical=config.diagnostics.critical_values(),
        )
        rows.update(
            resid_mean=report.mean,
            resid_std=report.std,
            resid_skew=report.skew,
            resid_kurt=report.kurt,
            jb=report.jb,
            ks=report.ks,
            ad=report.ad,
            dw=report.dw,
        )
        rows.update({f"q{lag}": value for lag, value in report.q.items()})

        frame = pd.DataFrame({"value": pd.Series(rows, dtype=float)})
        frame.index.name = "parameter"
        _render(frame, f"{series.label}: ARMA({order[0]},{order[1]}) on {window} observations", opts, output)
        if opts.format == OutputFormat.TEXT.value:
            verdict = "passes" if report.gaussianity_passes else "fails"
            console.print(f"Residual Gaussianity battery {verdict} at 5%")


@app.command()
def calibrate(
    horizon: str | None = typer.Option(None, "--horizon", "-T", help="Horizon in years, or 'inf' [default: 30]"),
    alpha: float | None = typer.Option(None, "--alpha", "-a", help="Nominal size [default: 0.05]"),
    boundary: str | None = typer.Option(None, "--boundary", "-f", help="Boundary function: sqrt, linear, sqrt_log"),
    replications: int | None = typer.Option(None, "--replications", "-B", help="Monte Carlo replications"),
    seed: int | None = SeedOption,
    threads: int | None = ThreadsOption,
    cache: bool | None = typer.Option(None, "--cache/--no-cache", help="Use the constant cache [default: on]"),
    check: bool | None = typer.Option(
        None, "--check/--no-check", help="Estimate the crossing probability on fresh walks"
    ),
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
    config_file: Path | None = RunConfigOption,
) -> None:
    """Calibrate the boundary constant c by Monte Carlo."""
    from .cache import ConstantCache, calibrate_cached
    from .calibration import crossing_probability

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            horizon=(horizon, str(config.monitor.horizon)),
            alpha=(alpha, config.monitor.alpha),
            boundary=(boundary, config.calibration.boundary),
            replications=(replications, config.calibration.replications),
            seed=(seed, config.calibration.seed),
            threads=(threads, config.calibration.threads),
            cache=(cache, True),
            check=(check, False),
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        spec = calibrate_cached(
            _parse_horizon(opts.horizon),
            opts.alpha,
            opts.boundary,
            opts.replications,
            opts.seed,
            cache=ConstantCache(config.cache_path) if opts.cache else None,
            threads=opts.threads,
            indefinite_proxy=config.calibration.indefinite_horizon,
        )
        row: dict[str, Any] = {
            "T": "inf" if spec.indefinite else int(spec.horizon),
            "alpha": spec.alpha,
            "f": spec.f_kind,
            "B": spec.replications,
            "seed": spec.seed,
            "c": spec.c,
        }
        if opts.check:
            row["crossing"] = crossing_probability(spec, spec.replications, threads=opts.threads)
        frame = pd.DataFrame([row])
        if opts.format == OutputFormat.CSV.value:
            _render(frame, "", opts, output)
        else:
            opts.decimals = max(opts.decimals, 4)
            _render(frame, "Calibrated boundary", opts, output)


@app.command()
def table(
    horizon: str | None = typer.Option(None, "--horizon", "-T", help="Horizon in years, or 'inf' [default: 30]"),
    alpha: str | None = typer.Option(
        None, "--alpha", "-a", help="Comma-separated sizes [default: 0.05,0.10,0.32]"
    ),
    years: int | None = typer.Option(None, "--years", "-y", help="Monitored years shown [default: 10]"),
    start_year: int | None = typer.Option(
        None, "--start-year", help="Calendar year of the first monitored year [default: 2020]"
    ),
    boundary: str | None = typer.Option(None, "--boundary", "-f", help="Boundary function: sqrt, linear, sqrt_log"),
    replications: int | None = typer.Option(None, "--replications", "-B", help="Monte Carlo replications"),
    seed: int | None = SeedOption,
    threads: int | None = ThreadsOption,
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
    config_file: Path | None = RunConfigOption,
) -> None:
    """Tabulate critical values c·f(t) per size and calendar year."""
    from .calibration import calibrate_many, critical_value_table

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            horizon=(horizon, str(config.monitor.horizon)),
            alpha=(alpha, "0.05,0.10,0.32"),
            years=(years, 10),
            start_year=(start_year, config.monitor.start_year),
            boundary=(boundary, config.calibration.boundary),
            replications=(replications, config.calibration.replications),
            seed=(seed, config.calibration.seed),
            threads=(threads, config.calibration.threads),
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        t = _parse_horizon(opts.horizon)
        alphas = _parse_floats(opts.alpha, "--alpha")
        specs = calibrate_many(
            t,
            alphas,
            opts.boundary,
            opts.replications,
            opts.seed,
            opts.threads,
            config.calibration.indefinite_horizon,
        )
        frame = critical_value_table(
            t, alphas, opts.years, start_year=opts.start_year, specs=specs
        )
        _render(frame, f"Critical values (T={opts.horizon}, f={opts.boundary})", opts, output)


@monitor_app.command("init")
def monitor_init(
    data: Path = typer.Option(..., "--data", "-d", help="Vintage covering exactly the initial window"),
    state_file: Path = typer.Option(Path("monitor.state"), "--state", "-s", help="State file to create"),
    k: int | None = typer.Option(None, "--k", "-k", help="Initial window length [default: 61]"),
    alpha: float | None = typer.Option(None, "--alpha", "-a", help="Nominal size [default: 0.05]"),
    horizon: str | None = typer.Option(None, "--horizon", "-T", help="Horizon in years, or 'inf' [default: 30]"),
    boundary: str | None = typer.Option(None, "--boundary", "-f", help="Boundary function: sqrt, linear, sqrt_log"),
    p: int | None = typer.Option(None, "--p", help="Autoregressive order of the null model [default: 1]"),
    q: int | None = typer.Option(None, "--q", help="Moving-average order of the null model [default: 0]"),
    gaussianity_check: bool | None = typer.Option(
        None, "--gaussianity-check/--no-gaussianity-check", help="Check each refit window for Gaussianity"
    ),
    replications: int | None = typer.Option(None, "--replications", "-B", help="Calibration replications"),
    seed: int | None = SeedOption,
    threads: int | None = ThreadsOption,
    cache: bool | None = typer.Option(None, "--cache/--no-cache", help="Use the constant cache [default: on]"),
    force: bool = typer.Option(False, "--force", help="Overwrite an existing state file"),
    config_file: Path | None = RunConfigOption,
) -> None:
    """Calibrate the boundary and start a monitor on the initial vintage."""
    from .cache import ConstantCache, calibrate_cached
    from .flux_data import read_vintage
    from .monitor import MonitorConfig, init_monitor, save_state

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            k=(k, config.monitor.k),
            alpha=(alpha, config.monitor.alpha),
            horizon=(horizon, str(config.monitor.horizon)),
            boundary=(boundary, config.calibration.boundary),
            p=(p, 1),
            q=(q, 0),
            gaussianity_check=(gaussianity_check, config.monitor.gaussianity_check),
            replications=(replications, config.calibration.replications),
            seed=(seed, config.calibration.seed),
            threads=(threads, config.calibration.threads),
            cache=(cache, True),
        )
        if state_file.exists() and not force:
            raise ConfigurationError(f"state file {state_file} exists; use --force to overwrite")

        vintage = read_vintage(data)
        spec = calibrate_cached(
            _parse_horizon(opts.horizon),
            opts.alpha,
            opts.boundary,
            opts.replications,
            opts.seed,
            cache=ConstantCache(config.cache_path) if opts.cache else None,
            threads=opts.threads,
            indefinite_proxy=config.calibration.indefinite_horizon,
        )
        monitor_config = MonitorConfig(
            k=opts.k,
            boundary=spec,
            model_orders=(opts.p, opts.q),
            gaussianity_check=opts.gaussianity_check,
        )
        state = init_monitor(monitor_config, vintage)
        save_state(state, state_file)

    console.print(
        Panel(
            f"[bold]{state.label}[/bold] {vintage.first_year}-{vintage.last_year}, K={monitor_config.k}\n"
            f"phi={state.init_phi:.4f} sigma={state.init_sigma:.4f} gaussianity={state.init_gauss_flag}\n"
            f"c={spec.c:.4f} alpha={spec.alpha} T={opts.horizon} f={spec.f_kind}\n"
            f"[dim]State written to {state_file}[/dim]",
            title="Monitor initialized",
            border_style="blue",
        )
    )


@monitor_app.command("step")
def monitor_step(
    data: Path = typer.Option(..., "--data", "-d", help="Vintage one year longer than the previous one"),
    state_file: Path = typer.Option(Path("monitor.state"), "--state", "-s", help="State file to update"),
) -> None:
    """Process the next annual vintage; exits with code 3 when the test rejects."""
    from .flux_data import read_vintage
    from .monitor import Decision, load_state, save_state, step

    get_config()
    with _errors():
        state = load_state(state_file)
        state, decision = step(state, read_vintage(data))
        save_state(state, state_file)

    record = state.steps[-1]
    style = "red" if decision is Decision.REJECT else "green"
    console.print(
        f"{record.year}: innovation={record.innovation:.2f} Z={record.z:.2f} "
        f"-C={-record.boundary:.2f} [{style}]{decision.value}[/{style}] ({state.status_text()})"
    )
    if decision is Decision.REJECT:
        raise typer.Exit(EXIT_REJECT)


@monitor_app.command("status")
def monitor_status(
    state_file: Path = typer.Option(Path("monitor.state"), "--state", "-s", help="State file to read"),
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
) -> None:
    """Show the per-year history and status of a monitor."""
    from .monitor import load_state, status_report

    config = get_config()
    with _errors():
        opts = _resolve(
            None,
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        report = status_report(load_state(state_file))
        _render(report.table, f"Monitor {state_file.name}", opts, output)

    if opts.format == OutputFormat.TEXT.value:
        console.print(report.summary)
        for note in report.notes:
            console.print(f"[yellow]• {note}[/yellow]")


@app.command()
def simulate(
    dgp: int | None = typer.Option(None, "--dgp", help="Preset (phi, sigma): 1, 2 or 3 [default: 1]"),
    phi: float | None = typer.Option(None, "--phi", help="AR(1) coefficient (overrides --dgp)"),
    sigma: float | None = typer.Option(None, "--sigma", help="Innovation std dev (overrides --dgp)"),
    k: int | None = typer.Option(None, "--k", "-k", help="Initial window length [default: 61]"),
    horizon: int | None = typer.Option(None, "--horizon", "-T", help="Monitoring horizon [default: 30]"),
    alpha: float | None = typer.Option(None, "--alpha", "-a", help="Nominal size [default: 0.05]"),
    g: float | None = typer.Option(None, "--g", help="Annual abatement fraction [default: 0.0692]"),
    m: float | None = typer.Option(None, "--m", help="Misreporting parameter [default: 0]"),
    e_base: float | None = typer.Option(None, "--e-base", help="Baseline fossil emissions, GtC/yr [default: 9.6]"),
    tau_offset: int | None = typer.Option(
        None, "--tau-offset", help="Monitored year in which misreporting starts [default: 1]"
    ),
    sweep: str | None = typer.Option(
        None, "--sweep", help="Power curve over m given as m=START:STEP:STOP (inclusive)"
    ),
    boundary: str | None = typer.Option(None, "--boundary", "-f", help="Boundary function: sqrt, linear, sqrt_log"),
    replications: int | None = typer.Option(None, "--replications", "-B", help="Simulated histories [default: 10000]"),
    calibration_replications: int | None = typer.Option(
        None, "--calibration-replications", help="Replications used to calibrate the boundary"
    ),
    seed: int | None = typer.Option(
        None, "--seed", help="Seed of the simulated histories [default: settings, 20210301]"
    ),
    calibration_seed: int | None = typer.Option(
        None, "--calibration-seed", help="Seed of the boundary calibration [default: settings, 20210301]"
    ),
    threads: int | None = ThreadsOption,
    cache: bool | None = typer.Option(None, "--cache/--no-cache", help="Use the constant cache [default: on]"),
    output_format: OutputFormat | None = FormatOption,
    output: Path | None = OutputOption,
    config_file: Path | None = RunConfigOption,
) -> None:
    """Size, power and detection-time experiments on simulated vintages."""
    from .cache import ConstantCache, calibrate_cached
    from .scenario import ScenarioSpec, dgp_preset, parse_sweep, power_sweep, run_experiment

    config = get_config()
    with _errors():
        opts = _resolve(
            config_file,
            dgp=(dgp, 1),
            phi=(phi, None),
            sigma=(sigma, None),
            k=(k, config.monitor.k),
            horizon=(horizon, config.monitor.horizon),
            alpha=(alpha, config.monitor.alpha),
            g=(g, config.simulation.g),
            m=(m, 0.0),
            e_base=(e_base, config.simulation.e_base),
            tau_offset=(tau_offset, 1),
            sweep=(sweep, None),
            boundary=(boundary, config.calibration.boundary),
            replications=(replications, config.simulation.replications),
            calibration_replications=(calibration_replications, config.calibration.replications),
            seed=(seed, config.calibration.seed),
            calibration_seed=(calibration_seed, config.calibration.seed),
            threads=(threads, config.calibration.threads),
            cache=(cache, True),
            format=(output_format, config.output.format),
            decimals=(None, config.output.decimals),
        )
        preset_phi, preset_sigma = dgp_preset(opts.dgp)
        spec = ScenarioSpec(
            phi=preset_phi if opts.phi is None else float(opts.phi),
            sigma=preset_sigma if opts.sigma is None else float(opts.sigma),
            k=opts.k,
            horizon=opts.horizon,
            alpha=opts.alpha,
            g=opts.g,
            m=opts.m,
            e_base=opts.e_base,
            tau_offset=opts.tau_offset,
            replications=opts.replications,
            seed=opts.seed,
            f_kind=opts.boundary,
            calibration_replications=opts.calibration_replications,
            calibration_seed=opts.calibration_seed,
        )
        spec_boundary = calibrate_cached(
            spec.horizon,
            spec.alpha,
            spec.f_kind,
            spec.calibration_replications,
            spec.calibration_seed,
            cache=ConstantCache(config.cache_path) if opts.cache else None,
            threads=opts.threads,
        )

        if opts.sweep is not None:
            ms = parse_sweep(str(opts.sweep).removeprefix("m="))
            frame = power_sweep(spec, ms, spec_boundary, opts.threads)
            _render(frame, f"Power curve (phi={spec.phi}, sigma={spec.sigma})", opts, output)
            return

        report = run_experiment(spec, spec_boundary, opts.threads)
        summary = pd.DataFrame([report.summary()]).set_index("m")
        if opts.format == OutputFormat.CSV.value:
            _render(report.to_frame().set_index("replication"), "", opts, output)
            err_console.print(
                _frame_table(summary, "Summary", opts.decimals)
            )
        else:
            _render(summary, f"Simulation (phi={spec.phi}, sigma={spec.sigma}, m={spec.m})", opts, output)
            if report.failures:
                console.print(f"[yellow]{len(report.failures)} replications failed and were excluded[/yellow]")


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress at debug level"),
    settings_file: Path | None = typer.Option(
        None, "--settings", help="Settings TOML file [default: ./.co2monitor.toml, then ~/.co2monitor.toml]"
    ),
    version: bool = typer.Option(
        False, "--version", callback=_version_callback, is_eager=True, help="Show the version and exit"
    ),
) -> None:
    """co2monitor - sequential test for under-reported CO2 emissions."""
    global _config
    _setup_logging(verbose)
    _config = None
    try:
        get_config(settings_file)
    except ConfigurationError as e:
        err_console.print(e.one_line(), markup=False, highlight=False, soft_wrap=True)
        raise typer.Exit(e.exit_code) from e

    if ctx.invoked_subcommand is None:
        console.print(
            Panel(
                "[bold blue]co2monitor[/bold blue] - budget imbalance monitoring\n\n"
                "Commands:\n"
                "  [cyan]co2monitor ingest FILE[/cyan]       - Check a vintage\n"
                "  [cyan]co2monitor diagnose FILE...[/cyan]  - Diagnostics table\n"
                "  [cyan]co2monitor fit FILE[/cyan]          - Fit the null model\n"
                "  [cyan]co2monitor calibrate[/cyan]         - Boundary constant\n"
                "  [cyan]co2monitor table[/cyan]             - Critical values by year\n"
                "  [cyan]co2monitor monitor init|step|status[/cyan]\n"
                "  [cyan]co2monitor simulate[/cyan]          - Size and power experiments\n"
                "  [cyan]co2monitor config init|show|validate[/cyan]",
                border_style="blue",
            )
        )


if __name__ == "__main__":
    app()
