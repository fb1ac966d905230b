"""This module provides the StrategicDynamics Command-line Interface."""
# StrategicDynamics/cli.py

import time
from typing import Optional

import typer
from loguru import logger
from rich import print as rprint
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from StrategicDynamics.basins import basin_sizes, sweep_basins
from StrategicDynamics.config import RunConfig, load_config
from StrategicDynamics.cycles import CENSUS_T_END, cycle_census
from StrategicDynamics.dynamics import PopulationState, integrate
from StrategicDynamics.game_model import BUILTIN_SCENARIOS, check_low_dominance
from StrategicDynamics.helpers import (StrategicDynamicsError, close_logger, configure_logging, emit_report,
                                       parse_float_list)
from StrategicDynamics.metrics import annotate_trajectory
from StrategicDynamics.stability import enumerate_fixed_points

app = typer.Typer(
    name="StrategicDynamics",
    help="Replicator dynamics of institutions and strategic users in classification games.",
    add_completion=True
)

# Shared options
CONFIG_OPTION = typer.Option(None, "--config", help="Config file with 'key = value' lines.")
OUT_OPTION = typer.Option(None, "--out", help="Output file; the report is printed when omitted.")
FORMAT_OPTION = typer.Option(None, "--format", help="Output format: csv or json.")
THREADS_OPTION = typer.Option(None, "--threads", help="Worker threads, a positive integer or 'auto'.")
SEED_OPTION = typer.Option(None, "--seed", help="Seed of the random generator.")
SCENARIO_OPTION = typer.Option(None, "--scenario", help="baseline, manipulation_proof or recourse.")
PLACEMENT_OPTION = typer.Option(None, "--placement", help="Grid placement: centred (off the faces) or inclusive.")


def _setup(command: str, config_path: Optional[str], **flags) -> RunConfig:
    configure_logging(command)
    config = load_config(config_path).with_overrides(**flags)
    logger.info(f"Running '{command}' for scenario {config.scenario.name} with {config.params.to_dict()}.")
    return config


def _write(report, config: RunConfig, default_format: str, summary: Optional[str] = None):
    fmt = config.fmt or default_format
    text = emit_report(report, fmt, config.out)
    if config.out is None:
        typer.echo(text, nl=False)
        return
    if summary:
        rprint(summary)
    rprint(f"[green]Saved {fmt} report to {escape(config.out)}.[green]")


def _fail(e: StrategicDynamicsError):
    rprint(f"[red]{type(e).__name__}: {escape(str(e))}[red]")
    logger.error(f"{type(e).__name__}: {e}")
    raise typer.Exit(code=e.exit_code)


@app.command()
def simulate(
    config: Optional[str] = CONFIG_OPTION,
    x0: float = typer.Option(0.5, "--x0", help="Initial share of Medium institutions."),
    yg0: float = typer.Option(0.5, "--yg0", help="Initial share of NotAdapt Good users."),
    yb0: float = typer.Option(0.5, "--yb0", help="Initial share of Fake Bad users."),
    t_end: Optional[float] = typer.Option(None, "--t-end", help="Final model time."),
    dt: Optional[float] = typer.Option(None, "--dt", help="Step size."),
    record_every: Optional[int] = typer.Option(None, "--record-every", help="Record every n-th step."),
    metrics: bool = typer.Option(False, "--metrics", help="Append tp, tn, fp, fn and social_cost columns."),
    scenario: Optional[str] = SCENARIO_OPTION,
    out: Optional[str] = OUT_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
    threads: Optional[str] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Integrate one trajectory from (x0, yg0, yb0)."""
    try:
        cfg = _setup("simulate", config, scenario=scenario, t_end=t_end, dt=dt, record_every=record_every,
                     out=out, fmt=fmt, threads=threads, seed=seed)
        traj = integrate(PopulationState(x0, yg0, yb0), cfg.scenario, cfg.params, cfg.t_end, cfg.dt, cfg.record_every)
        _write(annotate_trajectory(traj) if metrics else traj.to_frame(), cfg, "csv")
    except StrategicDynamicsError as e:
        _fail(e)
    finally:
        close_logger()


@app.command()
def stability(
    config: Optional[str] = CONFIG_OPTION,
    scenario: Optional[str] = SCENARIO_OPTION,
    out: Optional[str] = OUT_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
    threads: Optional[str] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Enumerate fixed points with their eigenvalues and stability class."""
    try:
        cfg = _setup("stability", config, scenario=scenario, out=out, fmt=fmt, threads=threads, seed=seed)
        reports = enumerate_fixed_points(cfg.scenario, cfg.params)
        if cfg.out is None and cfg.fmt is None:
            table = Table(title=f"Fixed points ({cfg.scenario.name})")
            for column in ("x1", "yG1", "yB1", "kind", "label", "classification", "eigenvalues"):
                table.add_column(column)
            for report in reports:
                eigs = ", ".join(f"{ev.real:.6g}{ev.imag:+.6g}i" if ev.imag else f"{ev.real:.6g}"
                                 for ev in report.eigenvalues)
                loc = report.location
                table.add_row(f"{loc.x1:.6g}", f"{loc.yg1:.6g}", f"{loc.yb1:.6g}", report.kind.value,
                              report.label or "", report.classification.value, eigs)
            Console().print(table)
        else:
            _write(reports, cfg, "json")
    except StrategicDynamicsError as e:
        _fail(e)
    finally:
        close_logger()


@app.command()
def basins(
    config: Optional[str] = CONFIG_OPTION,
    grid_n: Optional[int] = typer.Option(None, "--grid-n", help="Grid points per axis."),
    t_end: Optional[float] = typer.Option(None, "--t-end", help="Integration horizon of every start."),
    placement: Optional[str] = PLACEMENT_OPTION,
    scenario: Optional[str] = SCENARIO_OPTION,
    out: Optional[str] = OUT_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
    threads: Optional[str] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Basin sizes of every attractor over a grid of starts."""
    try:
        cfg = _setup("basins", config, scenario=scenario, n_per_axis=grid_n, t_end=t_end, out=out, fmt=fmt,
                     threads=threads, seed=seed, placement=placement)
        start = time.time()
        report = basin_sizes(cfg.scenario, cfg.params, cfg.n_per_axis, cfg.t_end, cfg.dt, cfg.tol_corner,
                             cfg.n_threads, placement=cfg.placement)
        logger.info(f"Basin run finished in {time.time() - start:.1f}s.")
        _write(report, cfg, "json")
    except StrategicDynamicsError as e:
        _fail(e)
    finally:
        close_logger()


@app.command()
def sweep(
    config: Optional[str] = CONFIG_OPTION,
    ratios: str = typer.Option("0.2,0.4", "--ratios", help="Comma-separated rho/lambda values."),
    rates: str = typer.Option("1,2,5", "--rates", help="Comma-separated institution rates r."),
    grid_n: Optional[int] = typer.Option(None, "--grid-n", help="Grid points per axis."),
    placement: Optional[str] = PLACEMENT_OPTION,
    scenario: Optional[str] = SCENARIO_OPTION,
    out: Optional[str] = OUT_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
    threads: Optional[str] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Basin sizes over a grid of rho/lambda ratios and rates r."""
    try:
        cfg = _setup("sweep", config, scenario=scenario, n_per_axis=grid_n, out=out, fmt=fmt, threads=threads,
                     seed=seed, placement=placement)
        result = sweep_basins(cfg.scenario, cfg.params, parse_float_list(ratios, "--ratios"),
                              parse_float_list(rates, "--rates"), cfg.n_per_axis, t_end=cfg.t_end, dt=cfg.dt,
                              tol_corner=cfg.tol_corner, threads=cfg.n_threads, placement=cfg.placement)
        summary = f"[blue]{len(result.cells)} cells done, {len(result.errors)} failed.[blue]"
        _write(result, cfg, "csv", summary)
    except StrategicDynamicsError as e:
        _fail(e)
    finally:
        close_logger()


@app.command()
def cycles(
    config: Optional[str] = CONFIG_OPTION,
    n_random: Optional[int] = typer.Option(None, "--n-random", help="Number of random starts."),
    t_end: Optional[float] = typer.Option(None, "--t-end", help=f"Horizon of every start (default {CENSUS_T_END:g})."),
    scenario: Optional[str] = SCENARIO_OPTION,
    out: Optional[str] = OUT_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
    threads: Optional[str] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Share of random starts that settle on a cycle."""
    try:
        cfg = _setup("cycles", config, scenario=scenario, n_random=n_random, out=out, fmt=fmt, threads=threads,
                     seed=seed)
        census = cycle_census(cfg.scenario, cfg.params, cfg.n_random, cfg.seed,
                              t_end if t_end is not None else CENSUS_T_END, cfg.dt, tol_corner=cfg.tol_corner,
                              threads=cfg.n_threads)
        _write(census, cfg, "json", f"[blue]{len(census.cycles)}/{census.n_random} starts settle on a cycle.[blue]")
    except StrategicDynamicsError as e:
        _fail(e)
    finally:
        close_logger()


@app.command()
def dominance(
    config: Optional[str] = CONFIG_OPTION,
    scenario: Optional[str] = SCENARIO_OPTION,
    out: Optional[str] = OUT_OPTION,
    fmt: Optional[str] = FORMAT_OPTION,
    threads: Optional[str] = THREADS_OPTION,
    seed: Optional[int] = SEED_OPTION,
):
    """Check that the Low institution strategy is dominated by Medium."""
    try:
        cfg = _setup("dominance", config, scenario=scenario, out=out, fmt=fmt, threads=threads, seed=seed)
        if scenario is not None or not cfg.scenario.is_builtin:
            scenarios = [cfg.scenario]
        else:
            scenarios = list(BUILTIN_SCENARIOS.values())
        reports = [check_low_dominance(s, cfg.params) for s in scenarios]
        summary = "\n".join(f"{r.scenario}: Low dominated by Medium = {r.passed}" for r in reports)
        _write(reports, cfg, "json", f"[blue]{summary}[blue]")
    except StrategicDynamicsError as e:
        _fail(e)
    finally:
        close_logger()


# click command for the sphinx-click docs
typer_click_object = typer.main.get_command(app)


if __name__ == "__main__":
    app()
