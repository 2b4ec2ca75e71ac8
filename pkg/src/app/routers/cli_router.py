"""
╔══════════════════════════════════════════════════════════════════════════╗
║                     Storage Valuation — CLI Commands                    ║
╠══════════════════════════════════════════════════════════════════════════╣
║                                                                        ║
║  price        COS value per energy level (+ Greeks at S0, e_start)     ║
║  greeks       Greeks at one point or over a price × level grid         ║
║  lsmc         multi-run LSMC value, 95% interval, policy statistics    ║
║  convergence  value against the number of cosine terms N               ║
║  sweep        value against one dotted configuration key               ║
║  simulate     sample spot-price trajectories                           ║
║  reproduce    all bundled configurations against published values     ║
║                                                                        ║
║  Exit codes: 0 ok, 2 configuration error, 3 numeric failure.           ║
║  Reports go to files and a summary table to stdout; logs to stderr.    ║
║                                                                        ║
╚══════════════════════════════════════════════════════════════════════════╝
"""

from typing import List, Optional

import typer
import yaml
from dependency_injector.wiring import Provide, inject
from rich.console import Console
from rich.table import Table

from src.app.config.config import Config
from src.app.config.run_config import RunConfig, load_run_config
from src.app.containers.app_container import AppContainer
from src.app.controllers.lsmc_controller import LsmcController
from src.app.controllers.valuation_controller import ValuationController
from src.app.error_handlers.error_handlers import cli_error_boundary
from src.app.exceptions.custom_exceptions import EXIT_NUMERIC_FAILURE, ConfigException

router = typer.Typer(help="Valuation of electricity storage contracts (COS and LSMC).", no_args_is_help=True)
console = Console()

# ─── Shared Options ─────────────────────────────────────────────────────

ConfigOption = typer.Option(..., "--config", "-c", help="YAML run configuration.")
OutOption = typer.Option(None, "--out", help="Output directory (default: config output.directory or OUTPUT_DIR).")
FormatOption = typer.Option(None, "--format", help="csv or json (default: config output.formats).")
ThreadsOption = typer.Option(None, "--threads", min=1, help="Worker threads (default: N_THREADS).")
SetOption = typer.Option(None, "--set", help="Dotted override KEY=VALUE, repeatable, e.g. model.sigma=1.2.")


def _parse_floats(text: str, name: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigException(f"{name} must be a comma-separated list of numbers, got '{text}'")


def _parse_overrides(items: Optional[List[str]]) -> dict:
    overrides = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigException(f"override '{item}' is not of the form KEY=VALUE")
        overrides[key.strip()] = yaml.safe_load(raw)
    return overrides


def _load(config_path: str, overrides: Optional[List[str]]) -> RunConfig:
    config = load_run_config(config_path)
    parsed = _parse_overrides(overrides)
    return config.with_overrides(**parsed) if parsed else config


def _threads(threads: Optional[int]) -> int:
    return threads if threads is not None else Config.N_THREADS


def _output(config: Optional[RunConfig], out: Optional[str], fmt: Optional[str]):
    if fmt is not None and fmt not in ("csv", "json"):
        raise ConfigException(f"--format must be csv or json, got '{fmt}'")
    directory = out or (config.output.directory if config is not None else None) or Config.OUTPUT_DIR
    formats = [fmt] if fmt else (list(config.output.formats) if config is not None else ["csv", "json"])
    return directory, formats


# ─── Injected Controllers ───────────────────────────────────────────────


@inject
def _valuation_controller(
    output_dir: str,
    formats: List[str],
    factory=Provide[AppContainer.valuation_controller.provider],
    repository=Provide[AppContainer.result_repository],
) -> ValuationController:
    return factory(repository=repository.with_settings(output_dir, formats))


@inject
def _lsmc_controller(
    output_dir: str,
    formats: List[str],
    factory=Provide[AppContainer.lsmc_controller.provider],
    repository=Provide[AppContainer.result_repository],
) -> LsmcController:
    return factory(repository=repository.with_settings(output_dir, formats))


def _print_rows(title: str, rows: List[dict]) -> None:
    if not rows:
        console.print(f"[bold]{title}[/bold]: no rows")
        return
    table = Table(title=title)
    for column in rows[0]:
        table.add_column(str(column))
    for row in rows:
        table.add_row(*[f"{value:.6g}" if isinstance(value, float) else str(value) for value in row.values()])
    console.print(table)


# ─── Commands ───────────────────────────────────────────────────────────


@router.command()
def price(
    config: str = ConfigOption,
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
    overrides: Optional[List[str]] = SetOption,
    vega_fd: bool = typer.Option(False, "--vega-fd", help="Also compute the full finite-difference vega."),
    dump_coefficients: bool = typer.Option(False, "--dump-coefficients", help="Write V_k for every (m, e)."),
):
    """COS value v(t0, S0, e) for every energy level."""
    with cli_error_boundary():
        run = _load(config, overrides)
        controller = _valuation_controller(*_output(run, out, fmt))
        result = controller.price(run, n_jobs=_threads(threads), vega_fd=vega_fd, dump_coefficients=dump_coefficients)
        row = {"contract": result.contract, "sigma": result.sigma, "N": result.n_terms,
               "S0": result.spot0, "e_start": result.e_start, "value": result.value_at_start}
        if result.greeks is not None:
            row.update(delta=result.greeks.delta, gamma=result.greeks.gamma, vega=result.greeks.vega)
        if result.full_vega_fd is not None:
            row["vega_fd"] = result.full_vega_fd
        _print_rows("COS valuation", [row])


@router.command()
def greeks(
    config: str = ConfigOption,
    t_index: int = typer.Option(0, "--t-index", min=0, help="Exercise index m; 0 is the initial time."),
    prices: Optional[str] = typer.Option(None, "--prices", help="Comma-separated spot prices for a surface."),
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
    overrides: Optional[List[str]] = SetOption,
):
    """Δ, Γ and ν at (S0, e_start) or over prices × energy levels."""
    with cli_error_boundary():
        run = _load(config, overrides)
        grid = _parse_floats(prices, "--prices") if prices else None
        rows = _valuation_controller(*_output(run, out, fmt)).greeks(run, t_index, grid, n_jobs=_threads(threads))
        _print_rows(f"Greeks at t_index={t_index}", [g.model_dump() for g in rows[:50]])


@router.command()
def lsmc(
    config: str = ConfigOption,
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Master seed of the runs."),
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
    overrides: Optional[List[str]] = SetOption,
):
    """LSMC value and 95% interval over independent runs, with policy statistics."""
    with cli_error_boundary():
        run = _load(config, overrides)
        result = _lsmc_controller(*_output(run, out, fmt)).lsmc(run, seed=seed, n_jobs=_threads(threads))
        row = {"contract": result.contract, "sigma": result.sigma, "runs": len(result.runs),
               "value": result.value_mean, "ci_low": result.ci_low, "ci_high": result.ci_high}
        if result.out_of_sample_mean is not None:
            row["out_of_sample"] = result.out_of_sample_mean
        _print_rows("LSMC valuation", [row])


@router.command()
def convergence(
    config: str = ConfigOption,
    n_list: str = typer.Option("50,100,150,200,300,400", "--n-list", help="Comma-separated N values."),
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
    overrides: Optional[List[str]] = SetOption,
):
    """Value against the number of cosine terms."""
    with cli_error_boundary():
        run = _load(config, overrides)
        n_values = [int(n) for n in _parse_floats(n_list, "--n-list")]
        rows = _valuation_controller(*_output(run, out, fmt)).convergence(run, n_values, n_jobs=_threads(threads))
        _print_rows("Convergence in N", rows)


@router.command()
def sweep(
    config: str = ConfigOption,
    param: str = typer.Option(..., "--param", help="Dotted key, e.g. model.kappa or contract.delta_mwh."),
    values: str = typer.Option(..., "--values", help="Comma-separated parameter values."),
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
    overrides: Optional[List[str]] = SetOption,
):
    """Value against one configuration parameter."""
    with cli_error_boundary():
        run = _load(config, overrides)
        grid = _parse_floats(values, "--values")
        rows = _valuation_controller(*_output(run, out, fmt)).sweep(run, param, grid, n_jobs=_threads(threads))
        _print_rows(f"Sweep over {param}", rows)


@router.command()
def simulate(
    config: str = ConfigOption,
    n_paths: int = typer.Option(10, "--n-paths", min=1, help="Number of trajectories."),
    seed: Optional[int] = typer.Option(None, "--seed", min=0),
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
    overrides: Optional[List[str]] = SetOption,
):
    """Sample spot-price trajectories S = Φ(X) on the exercise grid."""
    with cli_error_boundary():
        run = _load(config, overrides)
        rows = _lsmc_controller(*_output(run, out, fmt)).simulate(run, n_paths, seed=seed, n_jobs=_threads(threads))
        console.print(f"Wrote {len(rows)} rows for {n_paths} paths")


@router.command()
def reproduce(
    config_dir: str = typer.Option(None, "--config-dir", help="Bundled configurations (default: CONFIG_DIR)."),
    contracts: str = typer.Option("1,2,3,4", "--contracts"),
    sigmas: str = typer.Option("0.3,0.6,0.9,1.2", "--sigmas"),
    with_lsmc: bool = typer.Option(False, "--lsmc", help="Also check COS against fresh LSMC intervals."),
    strict: bool = typer.Option(False, "--strict", help="Exit with code 3 if any cell fails."),
    out: Optional[str] = OutOption,
    fmt: Optional[str] = FormatOption,
    threads: Optional[int] = ThreadsOption,
):
    """Compare bundled configurations with the published values and Greeks."""
    with cli_error_boundary():
        controller = _valuation_controller(*_output(None, out, fmt))
        rows = controller.reproduce(
            config_dir or Config.CONFIG_DIR,
            contracts=[int(c) for c in _parse_floats(contracts, "--contracts")],
            sigmas=_parse_floats(sigmas, "--sigmas"),
            n_jobs=_threads(threads),
            with_lsmc=with_lsmc,
        )
        _print_rows("Reproduction", rows)
        failed = [row for row in rows if not row["passed"]]
        console.print(f"{len(rows) - len(failed)}/{len(rows)} cells within tolerance")
        if strict and failed:
            raise typer.Exit(code=EXIT_NUMERIC_FAILURE)
