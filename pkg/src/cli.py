"""
Command-line entry point.

    python -m src.cli privacy --mu 0.5 --delta 0.002
    python -m src.cli ci data.csv --B 100 --mu 0.5
    python -m src.cli simulate --config study.cfg
    python -m src.cli tradeoff --curve bootstrap:10,1000,0.05

The same group is mounted on the Flask app, so `flask --app src.main privboot ...`
works too.
"""
import json
import logging
import sys
from typing import List, Optional

import click
import numpy as np
import pandas as pd

from src.errors import PrivBootError, ReportError
from src.models.experiment import CliConfig
from src.models.inference import Sample
from src.services.bootstrap import privacy_summary
from src.services.datasets import ingest_regression_csv, read_value_column
from src.services.estimators import bounded_mean_estimator, regularized_logistic_estimator
from src.services.experiments import B_SIGMA, emit_report, private_interval, run_coverage_study
from src.services.tradeoff_calculus import curve_from_spec, tradeoff_functionals
from src.settings import configure_logging, settings

logger = logging.getLogger(__name__)

METHODS = ('m_out_of_n', 'n_out_of_n', 'blbquant')


def load_dataset(path: str, estimator: str, lower: float, upper: float):
    """(Sample, EstimatorSpec) for a CSV file: first column for the mean, mrkinc/shelco for logistic"""
    if estimator == 'logistic':
        return ingest_regression_csv(path), regularized_logistic_estimator(dimension=2)
    values = read_value_column(path)
    return Sample(records=values, lower=lower, upper=upper), bounded_mean_estimator(lower, upper)


@click.group()
@click.option('--threads', type=click.IntRange(min=1), default=None, help='Worker threads for resampling.')
@click.pass_context
def cli(ctx: click.Context, threads: Optional[int]):
    """Private bootstrap confidence intervals under Gaussian differential privacy."""
    ctx.ensure_object(dict)
    ctx.obj['threads'] = threads or settings.threads
    ctx.obj['threads_given'] = threads is not None


@cli.command()
@click.argument('dataset', type=click.Path(exists=True, dir_okay=False))
@click.option('--method', type=click.Choice(METHODS), default='m_out_of_n', show_default=True)
@click.option('--estimator', type=click.Choice(['mean', 'logistic']), default='mean', show_default=True)
@click.option('--n', 'n', type=click.IntRange(min=2), default=None, help='Expected number of records.')
@click.option('--m', 'm', type=click.IntRange(min=1), default=None, help='Resample size (default: choose-m rule).')
@click.option('--B', 'B', type=click.IntRange(min=1), required=True, help='Replications (resamples per bag for blbquant).')
@click.option('--mu', type=click.FloatRange(min=0.0, min_open=True), required=True, help='Total GDP budget.')
@click.option('--alpha', type=click.FloatRange(0.0, 0.5, min_open=True, max_open=True), default=0.05, show_default=True)
@click.option('--seed', type=int, default=None)
@click.option('--delta', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=None,
              help='delta for blbquant (default 1/n).')
@click.option('--lower', type=float, default=-5.0, show_default=True, help='Record domain for the mean.')
@click.option('--upper', type=float, default=5.0, show_default=True)
@click.pass_context
def ci(ctx, dataset, method, estimator, n, m, B, mu, alpha, seed, delta, lower, upper):
    """Private confidence interval for a dataset file, printed as JSON."""
    sample, spec = load_dataset(dataset, estimator, lower, upper)
    if n is not None and n != sample.size:
        raise click.BadParameter(f"{dataset} holds {sample.size} usable records, not {n}", param_hint='--n')
    seed = settings.default_seed if seed is None else seed
    interval = private_interval(
        method, sample, spec, B=B, mu=mu, alpha=alpha, rng=np.random.default_rng(seed), m=m, delta=delta,
        b_sigma=B_SIGMA['truncated_normal_mean' if estimator == 'mean' else 'logistic_census'],
        workers=ctx.obj['threads'],
    )
    logger.info(f"{method} interval on {sample.size} records: {interval.lower.tolist()} .. {interval.upper.tolist()}")
    click.echo(json.dumps({
        'method': method,
        'estimator': spec.name,
        'n': sample.size,
        'B': B,
        'mu': mu,
        'seed': seed,
        'theta_bar': None if interval.center is None else interval.center.tolist(),
        'interval': interval.to_dict(),
    }, indent=2))


@cli.command()
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--output', type=click.Path(dir_okay=False), default=None, help='Overrides `output` in the config.')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default=None, help='Overrides `format`.')
@click.pass_context
def simulate(ctx, config_path, output, fmt):
    """Run a coverage study described by a `key = value` config file."""
    try:
        config = CliConfig.from_file(config_path)
    except OSError as e:
        raise click.FileError(config_path, hint=str(e))
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--config')
    if ctx.obj['threads_given']:
        config = config.model_copy(update={'threads': ctx.obj['threads']})

    rows = run_coverage_study(config.experiment())
    path = emit_report(rows, output or config.output, fmt or config.format)
    click.echo(f"Wrote {len(rows)} rows to {path}")


@cli.command()
@click.option('--mu', type=click.FloatRange(min=0.0, min_open=True), default=None)
@click.option('--epsilon', type=click.FloatRange(min=0.0), default=None)
@click.option('--delta', type=click.FloatRange(0.0, 1.0, min_open=True, max_open=True), default=None)
@click.option('--m', 'm', type=click.IntRange(min=1), default=None)
@click.option('--n', 'n', type=click.IntRange(min=2), default=None)
@click.option('--B', 'B', type=click.IntRange(min=2), default=None)
@click.option('--epsilon-scale', type=click.FloatRange(min=0.0, min_open=True), default=1.0, show_default=True,
              help='Solve delta(scale * epsilon, mu) = delta.')
def privacy(mu, epsilon, delta, m, n, B, epsilon_scale):
    """Budget conversions, mu*_B and the choose-m rule, printed as JSON."""
    if all(value is None for value in (mu, epsilon, delta, n, B)):
        raise click.UsageError("give at least one of --mu, --epsilon, --delta, --n, --B")
    if (n is None) != (B is None):
        raise click.UsageError("--n and --B go together")
    click.echo(json.dumps(privacy_summary(mu=mu, epsilon=epsilon, delta=delta, m=m, n=n, B=B,
                                          epsilon_scale=epsilon_scale), indent=2))


@cli.command()
@click.option('--curve', 'curve_spec', required=True, help='gaussian:MU or bootstrap:M,N,MUSTAR')
@click.option('--points', type=click.IntRange(min=2), default=101, show_default=True)
@click.option('--output', type=click.Path(dir_okay=False), default=None, help='CSV file (default: stdout).')
def tradeoff(curve_spec, points, output):
    """Sample a trade-off curve as a two-column CSV (alpha, f_alpha)."""
    try:
        curve = curve_from_spec(curve_spec)
    except PrivBootError as e:
        raise click.BadParameter(str(e), param_hint='--curve')
    alphas = np.linspace(0.0, 1.0, points)
    frame = pd.DataFrame({'alpha': alphas, 'f_alpha': np.atleast_1d(curve(alphas))})
    if output:
        try:
            frame.to_csv(output, index=False)
        except OSError as e:
            logger.error(f"Error writing curve to {output}: {str(e)}")
            raise ReportError(f"cannot write {output}: {str(e)}")
        functionals = tradeoff_functionals(curve)
        click.echo(f"Wrote {points} points of {curve.label} to {output} (kl={functionals.kl:.6g})")
    else:
        click.echo(frame.to_csv(index=False), nl=False)


def dispatch(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and map the outcome to an exit code: 0 success, 2 usage error, 1 runtime error"""
    configure_logging()
    try:
        result = cli.main(args=argv, prog_name='privboot', standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo('Aborted!', err=True)
        return 1
    except (PrivBootError, OSError) as e:
        logger.error(f"Error running command: {str(e)}")
        click.echo(f"Error: {str(e)}", err=True)
        return 1
    return result if isinstance(result, int) else 0


if __name__ == '__main__':
    sys.exit(dispatch())
