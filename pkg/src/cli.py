"""
LongJump - Command Line Interface

    longjump run CONFIG [--threads N] [--out DIR]
    longjump audit-geometry CONFIG
    longjump oracle-norm CONFIG --element "a;b;c" --cap R

Exit codes: 0 experiment passed, 2 ran but outside tolerance, 1 error.
"""

import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from src.config.schema import ExperimentConfig, parse_config
from src.experiments.runner import ExperimentRunner
from src.geometry.oracle import oracle_norm
from src.groups.elements import parse_element
from src.utils.errors import ConfigValidationError, LongJumpError
from src.utils.logger import LongJumpLogger


def _load(config_path: str) -> ExperimentConfig:
    try:
        return parse_config(Path(config_path).read_text(encoding="utf-8"))
    except ConfigValidationError as e:
        click.echo("Invalid config:", err=True)
        for pointer, message in e.errors:
            click.echo(f" - {pointer or '/'}: {message}", err=True)
        sys.exit(1)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log engine steps at DEBUG level")
def cli(verbose: bool):
    """Heavy-tailed random walks on groups of polynomial growth."""
    if verbose:
        LongJumpLogger.set_level(logging.DEBUG)


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              envvar="LONGJUMP_THREADS", help="Engine parallelism (env LONGJUMP_THREADS)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")
def run(config_path: str, threads: int, out_dir: Optional[str]):
    """Run the experiment described by CONFIG."""
    cfg = _load(config_path)
    result = ExperimentRunner(cfg, out_dir=out_dir, threads=threads).run()
    if result.has_errors():
        click.echo("Experiment failed:", err=True)
        for err in result.errors:
            click.echo(f" - {err}", err=True)
    for warning in result.warnings:
        click.echo(f"warning: {warning}", err=True)
    if result.success:
        status = "PASS" if result.passed else "OUTSIDE TOLERANCE"
        click.echo(f"{cfg.experiment}: {status}")
        for name, digest in sorted(result.files.items()):
            click.echo(f"  {name}  {digest}")
    sys.exit(result.exit_code)


@cli.command("audit-geometry")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def audit_geometry(config_path: str):
    """Print the adapted (and naive) geometry of CONFIG as JSON."""
    cfg = _load(config_path)
    runner = ExperimentRunner(cfg)
    try:
        geom = runner.prepare()
        document = {"geometry": geom.to_dict(), "naive_exponent": runner.naive_exponent()}
    except LongJumpError as e:
        click.echo(f"Geometry failed: {e}", err=True)
        sys.exit(1)
    click.echo(json.dumps(document, indent=2, sort_keys=True))


@cli.command("oracle-norm")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--element", required=True, help='Group element, coordinates joined by ";"')
@click.option("--cap", type=float, required=True, help="Search cap on the weighted word norm")
def oracle_norm_command(config_path: str, element: str, cap: float):
    """Exact weighted word norm of ELEMENT by bounded search, next to the closed form."""
    cfg = _load(config_path)
    runner = ExperimentRunner(cfg)
    try:
        geom = runner.prepare()
        g = parse_element(runner.spec, element)
        exact = oracle_norm(runner.spec, geom.system_g, g, cap)
        closed = geom.closed_form_norm(g)
    except LongJumpError as e:
        click.echo(f"Oracle failed: {e}", err=True)
        sys.exit(1)
    click.echo(json.dumps({
        "element": element,
        "cap": cap,
        "oracle": exact,
        "closed_form": closed,
        "ratio": None if not exact else closed / exact,
    }, indent=2))


main = cli
