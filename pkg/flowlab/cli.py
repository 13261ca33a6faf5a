"""
Command line entry point::

    grflow-lab run --config generalized-flow --out results/ --threads 8
    grflow-lab refine --config generalized-flow --levels 3 --out refine/
    grflow-lab export-trajectory --config bismut-su2 --out traj/
    grflow-lab list-scenarios

``--config`` takes a scenario file or the name of a bundled scenario; the
default scenario runs when it is omitted.

Exit codes: 0 when no check is violated, 2 when one is, 3 when a numerical
failure or an exhausted step or time budget stops the run; 1 for a bad
scenario.
"""

import logging
import os
import sys
from typing import Optional

import click

from grflow.misc import set_threads

from .laboratory import EXIT_FAILURE, NUMERICAL_FAILURES, laboratory_for
from .refine import refine as refine_study
from .reporting import write_run, write_trajectory
from .scenario import Scenario, ScenarioError
from .selector import ScenarioSelector

logger = logging.getLogger("laboratory")


def _scenario(config: Optional[str], seed: Optional[int], level: int) -> Scenario:
    try:
        sc = ScenarioSelector().resolve(config)
        if seed is not None:
            sc = sc.with_overrides(seed=seed)
        return sc.refined(level)
    except ScenarioError as e:
        raise click.ClickException(str(e)) from e


config_option = click.option(
    "-c", "--config", default=None,
    help="Scenario file or bundled scenario name; the default scenario when omitted.",
)
out_option = click.option(
    "-o", "--out", default="grflow-out", show_default=True,
    type=click.Path(file_okay=False), help="Output directory.",
)
seed_option = click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the scenario seed.")
level_option = click.option(
    "--level", type=click.IntRange(min=0), default=0, show_default=True,
    help="Refine grid and snapshot spacing by 2**level.",
)


def _set_threads(ctx: click.Context, param: click.Parameter, value: int) -> int:
    set_threads(value)
    return value


threads_option = click.option(
    "--threads", type=click.IntRange(min=1), default=1, show_default=True,
    expose_value=False, callback=_set_threads,
    help="Worker threads for per-snapshot work; results do not depend on it.",
)


@click.group()
@click.option("-v", "--verbose", is_flag=True, default=False, help="Log at DEBUG level.")
def main(verbose: bool) -> None:
    """Numerical laboratory for the generalized Ricci flow and its heat estimates."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s:%(name)s: %(message)s",
    )


@main.command()
@config_option
@out_option
@seed_option
@threads_option
@level_option
def run(config: Optional[str], out: str, seed: Optional[int], level: int) -> None:
    """Run a scenario and write report.json, series/*.csv and trajectory.json."""
    sc = _scenario(config, seed, level)
    lab = laboratory_for(sc)
    report = lab.run()
    write_run(lab, report, out)

    for r in report.reports:
        click.echo(f"{str(r.verdict):<13}{r.check}  slack={r.slack:.6g} budget={r.budget:.3g}")
    if report.failure is not None:
        click.echo(f"failed: {report.failure['error']}: {report.failure['message']}", err=True)
    click.echo(f"{sc.name}: {report.verdict} (exit {report.exit_code})")
    sys.exit(report.exit_code)


@main.command()
@config_option
@out_option
@seed_option
@threads_option
@click.option("--levels", type=click.IntRange(min=2), default=3, show_default=True, help="Number of refinement levels.")
def refine(config: Optional[str], out: str, seed: Optional[int], levels: int) -> None:
    """Observed convergence orders of the identity residuals."""
    sc = _scenario(config, seed, 0)
    table = refine_study(sc, levels)
    table.write(out)
    for line in table.format():
        click.echo(line)
    if table.partial:
        click.echo("warning: the study stopped early, the table is partial", err=True)


@main.command("export-trajectory")
@config_option
@out_option
@seed_option
@threads_option
@level_option
def export_trajectory(config: Optional[str], out: str, seed: Optional[int], level: int) -> None:
    """Compute a scenario's trajectory (with heat and kernel evolutions) and write trajectory.json."""
    sc = _scenario(config, seed, level)
    lab = laboratory_for(sc)
    try:
        lab.createObjects()
    except NUMERICAL_FAILURES as e:
        click.echo(f"failed: {type(e).__name__}: {e}", err=True)
        sys.exit(EXIT_FAILURE)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "trajectory.json")
    write_trajectory(lab, path)
    click.echo(path)


@main.command("list-scenarios")
def list_scenarios() -> None:
    """List the bundled scenarios; the default is starred."""
    for line in ScenarioSelector().describe():
        click.echo(line)


if __name__ == "__main__":
    main()
