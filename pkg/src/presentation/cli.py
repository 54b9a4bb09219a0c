"""Command-line surface: simulate, sweep, dict-info and selftest."""

import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import anyio
import structlog
import typer
from rich.console import Console
from rich.table import Table

from src.application.dtos.scenario_dtos import ResultRow, ScenarioConfig, SweepAxis
from src.application.exceptions import ConfigurationError, DecoderNonConvergenceError
from src.application.mappers.result_mapper import ResultMapper
from src.core.config import Settings
from src.core.dependencies import (
    get_dictionary_info_use_case,
    get_result_storage,
    get_scenario_loader,
    get_selftest_use_case,
    get_settings_dep,
    get_sweep_use_case,
)
from src.core.logging import setup_logging
from src.domain.exceptions import DomainError

if sys.version_info < (3, 11):
    from exceptiongroup import BaseExceptionGroup

EXIT_CONFIG = 2
EXIT_NON_CONVERGENCE = 3

app = typer.Typer(
    name="nearfield-ura",
    help="Near-field unsourced random access simulator.",
    no_args_is_help=True,
    add_completion=False,
)
err_console = Console(stderr=True)
logger = structlog.get_logger(__name__)

ConfigOption = typer.Option(None, "--config", "-c", help="Scenario file (key=value lines).")
SeedOption = typer.Option(None, "--seed", help="Base seed of the trial streams.")
SeedsOption = typer.Option(None, "--seeds", help="Monte Carlo trials per point.")
ThreadsOption = typer.Option(None, "--threads", "-t", help="Worker threads.")
OutOption = typer.Option(None, "--out", "-o", help="Write CSV here instead of stdout.")
DumpOption = typer.Option(None, "--dump-dir", help="Write per-trial truth and cluster CSVs.")
StrictOption = typer.Option(False, "--strict", help="Fail on decoder non-convergence.")


def _unwrap(exc: BaseException) -> BaseException:
    """First leaf of a (possibly nested) exception group."""
    while isinstance(exc, BaseExceptionGroup) and exc.exceptions:
        exc = exc.exceptions[0]
    return exc


def _fail(message: str, code: int) -> None:
    err_console.print(f"[red]error:[/red] {message}")
    raise typer.Exit(code=code)


def _load(config: Optional[Path], seed: Optional[int], seeds: Optional[int]) -> ScenarioConfig:
    overrides: Dict[str, Any] = {"base_seed": seed, "seeds": seeds}
    loader = get_scenario_loader()
    if config is None:
        return loader.build({}, overrides)
    return loader.load(str(config), overrides)


def _emit(settings: Settings, rows: Sequence[ResultRow], out: Optional[Path]) -> None:
    if out is None:
        typer.echo(ResultMapper.rows_to_csv(rows), nl=False)
        return
    # relative targets land under the configured output directory
    base = out.parent if out.is_absolute() else Path(settings.sim_output_dir) / out.parent
    path = get_result_storage(str(base)).write_rows(out.name, rows)
    err_console.print(f"wrote {len(rows)} rows to {path}")


def _run_sweep(
    settings: Settings,
    cfg: ScenarioConfig,
    axis: SweepAxis,
    values: List[str],
    threads: Optional[int],
    strict: bool,
    dump_dir: Optional[Path],
) -> List[ResultRow]:
    use_case = get_sweep_use_case(
        settings,
        threads=threads,
        strict=strict,
        dump_dir=str(dump_dir) if dump_dir else None,
    )
    return anyio.run(use_case.execute, cfg, axis, values)


def _guarded(action) -> Any:
    """Run ``action`` and map failures onto exit codes."""
    try:
        return action()
    except BaseException as raw:  # task groups wrap worker errors
        if isinstance(raw, (typer.Exit, KeyboardInterrupt, SystemExit)):
            raise
        exc = _unwrap(raw)
        if isinstance(exc, (ConfigurationError, DomainError)):
            _fail(str(exc), EXIT_CONFIG)
        if isinstance(exc, DecoderNonConvergenceError):
            _fail(str(exc), EXIT_NON_CONVERGENCE)
        raise exc from None


@app.callback()
def main_callback() -> None:
    """Configure logging before any command runs."""
    setup_logging(get_settings_dep())


@app.command()
def simulate(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    seeds: Optional[int] = SeedsOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    dump_dir: Optional[Path] = DumpOption,
    strict: bool = StrictOption,
) -> None:
    """Run the scenario at each configured SNR and print one CSV row per SNR."""
    settings = get_settings_dep()

    def action() -> List[ResultRow]:
        cfg = _load(config, seed, seeds)
        values = [repr(float(v)) for v in cfg.snr_db]
        return _run_sweep(settings, cfg, SweepAxis.SNR, values, threads, strict, dump_dir)

    _emit(settings, _guarded(action), out)


@app.command()
def sweep(
    axis: SweepAxis = typer.Option(..., "--axis", help="Scenario field to vary."),
    values: str = typer.Option(..., "--values", help="Comma-separated sweep points."),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    seeds: Optional[int] = SeedsOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    dump_dir: Optional[Path] = DumpOption,
    strict: bool = StrictOption,
) -> None:
    """Vary one axis (snr, n_block, j_bits, dict) and print one CSV row per value."""
    settings = get_settings_dep()
    points = [v.strip() for v in values.split(",") if v.strip()]
    if not points:
        _fail("--values is empty", EXIT_CONFIG)

    def action() -> List[ResultRow]:
        cfg = _load(config, seed, seeds)
        return _run_sweep(settings, cfg, axis, points, threads, strict, dump_dir)

    _emit(settings, _guarded(action), out)


@app.command("dict-info")
def dict_info(config: Optional[Path] = ConfigOption) -> None:
    """Print the scenario dictionary summary as key=value lines."""

    def action() -> Dict[str, str]:
        return get_dictionary_info_use_case().execute(_load(config, None, None))

    for key, value in _guarded(action).items():
        typer.echo(f"{key}={value}")


@app.command()
def selftest(seed: int = typer.Option(0, "--seed", help="Seed of the random instances.")) -> None:
    """Run the built-in numerical oracles; exit 1 if any fails."""
    results = get_selftest_use_case(seed).execute()
    table = Table(title="selftest")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    for r in results:
        table.add_row(r.name, "PASS" if r.passed else "FAIL", r.detail)
    Console().print(table)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("selftest.failed", checks=failed)
        raise typer.Exit(code=1)
