"""Command line interface: ``riccati-lift check|run|bound --config PATH``."""
import functools
import logging

import click

from . import __version__
from .config import build_problem, load_config
from .errors import (
    ConfigError,
    DimensionError,
    InvariantViolation,
    PreconditionError,
    RiccatiLiftError,
    StageRangeError,
)
from .experiment import bound_table, lifted_window, resolve_depth, run_contraction_experiment
from .lifting import rank_report

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

VALIDATION_ERRORS = (ConfigError, DimensionError, PreconditionError, StageRangeError)


class DepthType(click.ParamType):
    """A positive integer or the literal ``auto``."""
    name = "INT|auto"

    def convert(self, value, param, ctx):
        if isinstance(value, int) or value == "auto":
            return value
        try:
            d = int(value)
        except ValueError:
            self.fail(f"{value!r} is neither a positive integer nor 'auto'", param, ctx)
        if d < 1:
            self.fail(f"lift depth must be positive, got {d}", param, ctx)
        return d


def exit_code_for(error: RiccatiLiftError) -> int:
    return EXIT_VALIDATION if isinstance(error, VALIDATION_ERRORS) else EXIT_NUMERICAL


def handle_errors(func):
    """Report library errors on stderr and exit with their code."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except InvariantViolation as e:
            click.echo(f"error: {len(e.violations)} invariant violation(s)", err=True)
            for v in e.violations:
                click.echo(f"  {v}", err=True)
            raise SystemExit(EXIT_NUMERICAL)
        except RiccatiLiftError as e:
            click.echo(f"error: {e}", err=True)
            raise SystemExit(exit_code_for(e))

    return wrapper


config_option = click.option(
    "--config", "config_path", required=True, type=click.Path(dir_okay=False),
    help="Experiment configuration (JSON)",
)
depth_option = click.option(
    "--d", "depth", type=DepthType(), default=None,
    help="Lift depth; overrides the configuration (INT or 'auto')",
)


@click.group()
@click.version_option(__version__, prog_name="riccati-lift")
@click.option("-v", "--verbose", is_flag=True, help="Log at DEBUG level")
def cli(verbose):
    """Riccati contraction experiments for time-varying LQ problems."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@config_option
@depth_option
@handle_errors
def check(config_path, depth):
    """Validate the configuration and print the rank report."""
    config = load_config(config_path)
    problem = build_problem(config)
    d = resolve_depth(config, problem, depth)
    t_lo, t_hi = lifted_window(config, d)
    report = rank_report(problem, d, t_lo, t_hi)
    click.echo(f"n={problem.n} m={problem.m} T={config.horizon} d={d} window=[{t_lo}, {t_hi}]")
    click.echo("t  sigma_n(Gamma)  sigma_n(Xi)  ok")
    for s in report.stages:
        click.echo(f"{s.t:<2d} {s.gamma.sigma_min:14.6e} {s.xi.sigma_min:12.6e}  "
                   f"{'yes' if s.passes else 'no'}")
    if not report.passes:
        click.echo(f"rank conditions fail at lifted stages {list(report.failing)}", err=True)
        raise SystemExit(EXIT_NUMERICAL)
    click.echo("rank conditions hold")


@cli.command()
@config_option
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default from the configuration)")
@depth_option
@click.option("--svg/--no-svg", default=True, help="Write the SVG plot")
@click.option("--log-scale/--no-log-scale", default=None,
              help="Plot distances on a log scale (default from the configuration)")
@handle_errors
def run(config_path, out_dir, depth, svg, log_scale):
    """Run the experiment and write CSV and SVG artifacts."""
    config = load_config(config_path)
    result = run_contraction_experiment(config, out_dir=out_dir, svg=svg, depth=depth,
                                        log_scale=log_scale)
    rows = result.table.rows
    click.echo(f"d={result.d} lifted stages [{result.window[0]}, {result.window[1]}]")
    click.echo(f"riemannian distance: k={rows[0].k} {rows[0].riemannian:.6g} -> "
               f"k={rows[-1].k} {rows[-1].riemannian:.6g}")
    click.echo(f"wrote {result.csv_path}")
    if result.svg_path is not None:
        click.echo(f"wrote {result.svg_path}")


@cli.command()
@config_option
@depth_option
@handle_errors
def bound(config_path, depth):
    """Print the certified contraction rate of each lifted stage."""
    config = load_config(config_path)
    problem = build_problem(config)
    d = resolve_depth(config, problem, depth)
    t_lo, t_hi = lifted_window(config, d)
    click.echo(f"d={d}")
    click.echo("t  zeta            eps             rho")
    for sb in bound_table(problem, d, t_lo, t_hi):
        if sb.bound.strict:
            b = sb.bound
            click.echo(f"{sb.t:<2d} {b.zeta:<15.9g} {b.eps:<15.9g} {b.rho:.9g}")
        else:
            click.echo(f"{sb.t:<2d} not strict: {sb.bound.reason} {sb.bound.detail}")
