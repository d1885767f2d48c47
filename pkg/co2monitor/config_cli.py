"""Configuration management CLI commands for co2monitor."""

from pathlib import Path

import typer
from rich.console import Console
from rich.table import Table

from .exceptions import ConfigurationError
from .settings import (
    CONFIG_NAME,
    config_issues,
    create_sample_config,
    get_config_path,
    load_config,
)

config_app = typer.Typer(
    name="config",
    help="Manage co2monitor settings",
    no_args_is_help=True,
)
console = Console()
err_console = Console(stderr=True)


def _fail(error: ConfigurationError) -> None:
    err_console.print(error.one_line(), markup=False, highlight=False)
    raise typer.Exit(error.exit_code)


@config_app.command()
def init(
    force: bool = typer.Option(False, "--force", "-f", help="Overwrite existing settings file"),
    global_config: bool = typer.Option(
        False, "--global", "-g", help="Create the settings file in the home directory"
    ),
) -> None:
    """Create a sample settings file."""
    if global_config:
        config_path = Path.home() / CONFIG_NAME
    else:
        config_path = Path.cwd() / CONFIG_NAME

    if config_path.exists() and not force:
        console.print(f"[yellow]Settings file already exists: {config_path}[/yellow]")
        console.print("Use --force to overwrite or --global for the home directory")
        raise typer.Exit(1)

    try:
        create_sample_config(config_path)
    except ConfigurationError as e:
        _fail(e)
    console.print(f"[green]✓ Created settings file: {config_path}[/green]")
    console.print()
    console.print("Next steps:")
    console.print("  • [cyan]co2monitor config show[/cyan] - View current settings")
    console.print("  • [cyan]co2monitor config validate[/cyan] - Check the values")


def _section_table(title: str, rows: list[tuple[str, str]]) -> Table:
    table = Table(title=title, show_header=False)
    table.add_column("Setting", style="cyan")
    table.add_column("Value")
    for name, value in rows:
        table.add_row(name, value)
    return table


@config_app.command()
def show(
    config_file: Path | None = typer.Option(None, "--settings", "-s", help="Path to settings file"),
) -> None:
    """Display current settings."""
    try:
        config = load_config(config_file)
    except ConfigurationError as e:
        _fail(e)
    config_path = config_file or get_config_path()

    console.print(f"[bold]Settings from: {config_path}[/bold]")
    if not config_path.exists():
        console.print("[dim]  (using defaults - no settings file found)[/dim]")
    console.print()

    diag = config.diagnostics
    q_values = ", ".join(f"Q({lag})={value}" for lag, value in diag.q.items())
    console.print(
        _section_table(
            "Diagnostics",
            [
                ("Jarque-Bera", str(diag.jb)),
                ("Kolmogorov-Smirnov", str(diag.ks)),
                ("Anderson-Darling", str(diag.ad)),
                ("Ljung-Box", q_values),
                ("Lags", ", ".join(str(lag) for lag in diag.lags)),
            ],
        )
    )
    console.print()

    cal = config.calibration
    console.print(
        _section_table(
            "Calibration",
            [
                ("Replications", f"{cal.replications:,}"),
                ("Seed", str(cal.seed)),
                ("Boundary", cal.boundary),
                ("Indefinite horizon", str(cal.indefinite_horizon)),
                ("Cache file", str(config.cache_path)),
                ("Threads", str(cal.threads)),
            ],
        )
    )
    console.print()

    mon = config.monitor
    console.print(
        _section_table(
            "Monitor",
            [
                ("Initial window K", str(mon.k)),
                ("Alpha", str(mon.alpha)),
                ("Horizon", f"{mon.horizon} years"),
                ("Gaussianity check", "✓" if mon.gaussianity_check else "✗"),
                ("First monitored year", str(mon.start_year)),
            ],
        )
    )
    console.print()

    sim = config.simulation
    console.print(
        _section_table(
            "Simulation",
            [
                ("Replications", f"{sim.replications:,}"),
                ("Baseline emissions", f"{sim.e_base} GtC/yr"),
                ("Abatement g", str(sim.g)),
            ],
        )
    )
    console.print()
    console.print(
        _section_table(
            "Output",
            [("Format", config.output.format), ("Decimals", str(config.output.decimals))],
        )
    )


@config_app.command()
def validate(
    config_file: Path | None = typer.Option(None, "--settings", "-s", help="Path to settings file"),
) -> None:
    """Validate the settings file."""
    try:
        config = load_config(config_file)
    except ConfigurationError as e:
        _fail(e)
    config_path = config_file or get_config_path()

    issues = config_issues(config)
    if issues:
        console.print(f"[yellow]Problems found in {config_path}:[/yellow]")
        for issue in issues:
            console.print(f"  • {issue}")
        raise typer.Exit(ConfigurationError.exit_code)

    console.print(f"[green]✓ Settings are valid: {config_path}[/green]")
