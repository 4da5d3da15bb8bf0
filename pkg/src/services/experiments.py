"""
Monte Carlo coverage studies.

Every (grid point, replication) pair gets its own generator seeded with
(seed, grid_index, replication), so studies are reproducible and the
order in which grid points run does not matter. Wall-clock time covers
interval construction only.
"""
import itertools
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import pandas as pd

from src.errors import ParameterError, ReportError
from src.models.experiment import REPORT_COLUMNS, ExperimentConfig, ReportRow
from src.models.inference import BootstrapConfig, ConfidenceInterval, EstimatorSpec, Sample
from src.models.privacy import PrivacyBudget
from src.services.blbquant import DEFAULT_RESAMPLES, blbquant_ci, make_blb_config
from src.services.bootstrap import choose_m, private_bootstrap_ci
from src.services.datasets import ingest_regression_csv, regression_sample_from_frame, synthesize_census_surrogate
from src.services.estimators import (
    bounded_mean_estimator,
    fit_regularized_logistic,
    regularized_logistic_estimator,
    sample_truncated_normal,
    synthesize_logistic_17d,
)
from src.services.gdp_core import solve_budget

logger = logging.getLogger(__name__)

TRUNCATION = (-5.0, 5.0)
REFERENCE_TOLERANCE = 1e-10
B_SIGMA = {
    'truncated_normal_mean': 5.0,
    'logistic_census': 1.0,
    'logistic_synthetic_17d': 1.0,
}


@dataclass(frozen=True, eq=False)
class ScenarioSetup:
    """Estimator, data source and the parameter the intervals should cover"""
    name: str
    estimator: EstimatorSpec
    draw: Callable[[int, np.random.Generator], Sample]
    truth: np.ndarray


def reference_minimizer(data: Sample) -> np.ndarray:
    """Ridge-logistic minimizer over the whole data set, at gradient tolerance 1e-10"""
    return fit_regularized_logistic(data, tolerance=REFERENCE_TOLERANCE)


def _resampling_scenario(name: str, population: Sample, dimension: int) -> ScenarioSetup:
    def draw(n: int, rng: np.random.Generator) -> Sample:
        return population.take(rng.integers(0, population.size, size=n))

    return ScenarioSetup(
        name=name,
        estimator=regularized_logistic_estimator(dimension=dimension),
        draw=draw,
        truth=reference_minimizer(population),
    )


def build_scenario(config: ExperimentConfig) -> ScenarioSetup:
    population_rng = np.random.default_rng([config.seed])

    if config.scenario == 'truncated_normal_mean':
        lower, upper = TRUNCATION
        return ScenarioSetup(
            name=config.scenario,
            estimator=bounded_mean_estimator(lower, upper),
            draw=lambda n, rng: sample_truncated_normal(lower, upper, n, rng),
            truth=np.zeros(1),
        )

    if config.scenario == 'logistic_synthetic_17d':
        population = synthesize_logistic_17d(config.population_size, population_rng)
        return _resampling_scenario(config.scenario, population, dimension=17)

    if config.data_path:
        population = ingest_regression_csv(config.data_path)
    else:
        logger.info(f"No data_path given; using a census surrogate of {config.population_size} rows")
        frame = synthesize_census_surrogate(config.population_size, population_rng).dropna()
        population = regression_sample_from_frame(frame)
    return _resampling_scenario(config.scenario, population, dimension=2)


def private_interval(method: str, sample: Sample, estimator: EstimatorSpec, *, B: int, mu: float,
                     alpha: float, rng: np.random.Generator, m: Optional[int] = None,
                     delta: Optional[float] = None, b_sigma: float = 5.0, interval_scale: str = 'root_n',
                     noise_free: bool = False, workers: int = 1) -> ConfidenceInterval:
    """
    A 1 - 2 alpha interval from one method under a total budget mu.

    The bootstrap methods spend mu/sqrt(2) on the point estimate and
    mu/sqrt(2) on the replicate set. BLBQuant gets the epsilon solving
    delta(epsilon, mu) = delta, with delta = 1/n unless given.
    """
    n = sample.size
    if method == 'blbquant':
        delta = delta if delta is not None else 1.0 / n
        epsilon = solve_budget('epsilon', delta=delta, mu=mu)
        blb = make_blb_config(n, epsilon, delta, alpha=2.0 * alpha, B=B, b_sigma=b_sigma,
                              interval_scale=interval_scale)
        return blbquant_ci(sample, estimator, blb, rng, workers=workers)

    if method == 'n_out_of_n':
        m = n
    elif method == 'm_out_of_n':
        m = min(m, n) if m else choose_m(n, B)
    else:
        raise ParameterError(f"Unsupported method: {method}")
    stage = BootstrapConfig(n=n, m=m, B=B, mu=PrivacyBudget(mu / math.sqrt(2.0)),
                            alpha=alpha, noise_free=noise_free)
    _, interval = private_bootstrap_ci(sample, estimator, stage, rng, workers=workers)
    return interval


def _interval(config: ExperimentConfig, setup: ScenarioSetup, sample: Sample, m: int, B: int,
              mu: float, rng: np.random.Generator) -> ConfidenceInterval:
    return private_interval(
        config.method, sample, setup.estimator, B=B, mu=mu, alpha=config.alpha, rng=rng, m=m,
        delta=config.delta, b_sigma=config.b_sigma or B_SIGMA[config.scenario],
        interval_scale=config.interval_scale, noise_free=config.noise_free, workers=config.threads,
    )


def _grid(config: ExperimentConfig):
    """(n, m, B, mu) for every grid point, in report order"""
    for n, mu in itertools.product(config.n, config.mu):
        if config.method == 'n_out_of_n':
            replication_grid = config.B or [max(1, round(mu ** 2 * n))]
        elif config.method == 'blbquant':
            replication_grid = config.B or [DEFAULT_RESAMPLES]
        else:
            replication_grid = config.B
        for B in replication_grid:
            if config.method == 'm_out_of_n':
                m = min(config.m, n) if config.m else choose_m(n, B)
            else:
                m = n
            yield n, m, B, mu


def run_coverage_study(config: ExperimentConfig, setup: Optional[ScenarioSetup] = None) -> List[ReportRow]:
    """Empirical coverage, mean length and mean time per grid point and coordinate"""
    setup = setup or build_scenario(config)
    logger.info(f"Starting {config.method} study on {config.scenario} "
                f"with {config.replications} replications per grid point")

    rows: List[ReportRow] = []
    for grid_index, (n, m, B, mu) in enumerate(_grid(config)):
        dimension = setup.estimator.dimension
        covered = np.zeros((config.replications, dimension), dtype=bool)
        lengths = np.zeros((config.replications, dimension))
        elapsed = np.zeros(config.replications)
        reported_m = m
        for rep in range(config.replications):
            data_rng, method_rng = np.random.default_rng([config.seed, grid_index, rep]).spawn(2)
            sample = setup.draw(n, data_rng)
            try:
                start = time.perf_counter()
                interval = _interval(config, setup, sample, m, B, mu, method_rng)
                elapsed[rep] = time.perf_counter() - start
            except Exception as e:
                logger.error(f"Error in replication {rep} at n={n}, B={B}, mu={mu}: {str(e)}")
                raise
            covered[rep] = interval.contains(setup.truth)
            lengths[rep] = interval.length

        if config.method == 'blbquant':
            delta = config.delta if config.delta is not None else 1.0 / n
            reported_m = make_blb_config(n, solve_budget('epsilon', delta=delta, mu=mu), delta).bag_size

        for coord in range(dimension):
            rows.append(ReportRow(
                scenario=config.scenario,
                method=config.method,
                n=n,
                m=reported_m,
                B=B,
                mu=mu,
                alpha=config.alpha,
                coord=coord,
                coverage=float(covered[:, coord].mean()),
                avg_length=float(lengths[:, coord].mean()),
                avg_time_sec=float(elapsed.mean()),
                replications=config.replications,
                seed=config.seed,
            ))
        logger.info(f"n={n}, m={reported_m}, B={B}, mu={mu}: coverage {covered.mean(axis=0).round(3).tolist()}, "
                    f"{elapsed.mean():.4f}s per interval")

    logger.info(f"Finished {config.method} study: {len(rows)} report rows")
    return rows


def _format_length(value: float) -> str:
    if not math.isfinite(value):
        return 'inf'
    return f"{value:.2e}" if value < 1e-3 else f"{value:.4g}"


def emit_report(rows: List[ReportRow], path, fmt: str = 'csv') -> str:
    """Write the rows as CSV (table formatting) or as a JSON array of objects."""
    if not rows:
        raise ParameterError("no report rows to write")
    if fmt not in ('csv', 'json'):
        raise ParameterError(f"Unsupported report format: {fmt}")

    frame = pd.DataFrame([row.to_dict() for row in rows], columns=list(REPORT_COLUMNS))
    try:
        directory = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(directory):
            raise OSError(f"directory {directory} does not exist")
        if fmt == 'csv':
            frame['coverage'] = frame['coverage'].map(lambda v: f"{v:.3f}")
            frame['avg_length'] = frame['avg_length'].map(_format_length)
            frame['avg_time_sec'] = frame['avg_time_sec'].map(lambda v: f"{v:.4g}")
            frame.to_csv(path, index=False)
        else:
            frame.to_json(path, orient='records', indent=2)
    except OSError as e:
        logger.error(f"Error writing report to {path}: {str(e)}")
        raise ReportError(f"cannot write report to {path}: {str(e)}")

    logger.info(f"Wrote {len(rows)} rows to {path}")
    return str(path)
