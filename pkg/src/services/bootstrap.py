"""
Resampling engines: the empirical bootstrap, the mu-GDP m-out-of-n
bootstrap, the choice of m and the percentile-type confidence interval.

Replicates are produced in chunks of CHUNK_SIZE. Every chunk draws its
indices and noise from its own stream spawned off the caller's generator,
so the result is the same for any worker count.
"""
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.errors import ParameterError, QuantileResolutionWarning
from src.models.inference import BootstrapConfig, BootstrapDraws, ConfidenceInterval, EstimatorSpec, Sample
from src.models.privacy import GaussianMechanismSpec, PrivacyBudget
from src.services.gdp_core import gaussian_mechanism, gdp_to_dp_delta, solve_budget
from src.services.tradeoff_calculus import mu_b_star

logger = logging.getLogger(__name__)

CHUNK_SIZE = 256


def choose_m(n: int, B: int) -> int:
    """m = log(1 - 1/B) / log(1 - 1/n), rounded to the nearest integer and clamped to [1, n]"""
    if int(n) != n or n < 2:
        raise ParameterError(f"n must be an integer of at least 2, got {n}")
    if int(B) != B or B < 2:
        raise ParameterError(f"B must be an integer of at least 2, got {B}")
    raw = math.log1p(-1.0 / B) / math.log1p(-1.0 / n)
    return int(min(max(math.floor(raw + 0.5), 1), n))


def _replicate_estimates(data: Sample, estimator: EstimatorSpec, k: int, B: int,
                         rng: np.random.Generator, noise: Optional[GaussianMechanismSpec],
                         workers: int) -> np.ndarray:
    """(B, dimension) estimates on size-k resamples, optionally privatized per replicate"""
    sizes = [min(CHUNK_SIZE, B - start) for start in range(0, B, CHUNK_SIZE)]
    streams = rng.spawn(len(sizes))

    def run(size: int, stream: np.random.Generator) -> np.ndarray:
        indices = stream.integers(0, data.size, size=(size, k))
        estimates = estimator.evaluate_batch(data, indices)
        if noise is not None:
            estimates = gaussian_mechanism(estimates, noise, stream)
        return estimates

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(run, sizes, streams))
    else:
        chunks = [run(size, stream) for size, stream in zip(sizes, streams)]
    return np.vstack(chunks)


def empirical_bootstrap(data: Sample, estimator: EstimatorSpec, B: int, rng: np.random.Generator,
                        workers: int = 1) -> np.ndarray:
    """Replicates sqrt(n)(theta(resample of size n) - theta_hat_n), one row per replicate."""
    if int(B) != B or B < 1:
        raise ParameterError(f"B must be a positive integer, got {B}")
    theta_hat = estimator.evaluate(data)
    estimates = _replicate_estimates(data, estimator, data.size, int(B), rng, None, workers)
    return math.sqrt(data.size) * (estimates - theta_hat)


def gdp_m_out_of_n_bootstrap(data: Sample, estimator: EstimatorSpec, config: BootstrapConfig,
                             rng: np.random.Generator, workers: int = 1) -> BootstrapDraws:
    """
    Private point estimate plus B private m-out-of-n replicates.

    theta_bar = theta(data) + N(0, (Delta(n)/mu)^2) per coordinate; every
    resample estimate gets N(0, (Delta(m)/mu*_B)^2). Each stage spends mu,
    so the released pair is sqrt(2) mu-GDP as B grows. With m = n this is
    the private n-out-of-n bootstrap.
    """
    if data.size != config.n:
        raise ParameterError(f"sample has {data.size} records but the config says n={config.n}")

    mu_star = mu_b_star(config.m, config.n, config.B, config.mu)
    theta_spec = GaussianMechanismSpec(estimator.sensitivity(config.n), config.mu)
    replicate_spec = GaussianMechanismSpec(estimator.sensitivity(config.m), PrivacyBudget(mu_star))
    theta_stream, replicate_stream = rng.spawn(2)

    theta_hat = estimator.evaluate(data)
    if config.noise_free:
        theta_bar = theta_hat
        estimates = _replicate_estimates(data, estimator, config.m, config.B, replicate_stream, None, workers)
    else:
        theta_bar = gaussian_mechanism(theta_hat, theta_spec, theta_stream)
        estimates = _replicate_estimates(data, estimator, config.m, config.B, replicate_stream,
                                         replicate_spec, workers)

    logger.debug(f"{estimator.name}: m={config.m}, n={config.n}, B={config.B}, mu*={mu_star:.4g}")
    return BootstrapDraws(
        theta_bar=theta_bar,
        replicates=math.sqrt(config.m) * (estimates - theta_bar),
        mu_star=mu_star,
        m=config.m,
        n=config.n,
        theta_noise_sd=0.0 if config.noise_free else theta_spec.noise_sd,
        replicate_noise_sd=0.0 if config.noise_free else replicate_spec.noise_sd,
    )


def _order_statistic(ordered: np.ndarray, gamma: float) -> np.ndarray:
    # x_(ceil(B gamma)), 1-based; the offset absorbs B*gamma landing a hair above an integer
    index = max(math.ceil(ordered.shape[0] * gamma - 1e-9), 1) - 1
    return ordered[index]


def bootstrap_ci(draws: BootstrapDraws, n: int, alpha: float) -> ConfidenceInterval:
    """[theta_bar - q*_{1-alpha}/sqrt(n), theta_bar - q*_alpha/sqrt(n)] per coordinate"""
    if not 0.0 < alpha < 0.5:
        raise ParameterError(f"alpha must lie in (0, 0.5), got {alpha}")
    if draws.B < 1:
        raise ParameterError("no replicates to take quantiles of")
    if draws.B < 1.0 / alpha:
        message = f"B={draws.B} replicates cannot resolve the {alpha:g} quantile; the interval uses the sample extremes"
        logger.warning(message)
        warnings.warn(message, QuantileResolutionWarning, stacklevel=2)

    ordered = np.sort(draws.replicates, axis=0)
    lower_q = _order_statistic(ordered, alpha)
    upper_q = _order_statistic(ordered, 1.0 - alpha)
    root_n = math.sqrt(n)
    return ConfidenceInterval(
        lower=draws.theta_bar - upper_q / root_n,
        upper=draws.theta_bar - lower_q / root_n,
        level=1.0 - 2.0 * alpha,
        center=draws.theta_bar,
    )


def private_bootstrap_ci(data: Sample, estimator: EstimatorSpec, config: BootstrapConfig,
                         rng: np.random.Generator, workers: int = 1) -> Tuple[BootstrapDraws, ConfidenceInterval]:
    """Draw the private replicates and turn them into the interval at level 1 - 2 alpha"""
    draws = gdp_m_out_of_n_bootstrap(data, estimator, config, rng, workers=workers)
    return draws, bootstrap_ci(draws, config.n, config.alpha)


def privacy_summary(mu: Optional[float] = None, epsilon: Optional[float] = None, delta: Optional[float] = None,
                    m: Optional[int] = None, n: Optional[int] = None, B: Optional[int] = None,
                    epsilon_scale: float = 1.0) -> Dict[str, Any]:
    """Every budget conversion the given quantities allow"""
    result: Dict[str, Any] = {}
    if mu is not None and epsilon is not None:
        result['delta'] = gdp_to_dp_delta(mu, epsilon)
    if mu is not None and delta is not None:
        result['epsilon'] = solve_budget('epsilon', delta=delta, mu=mu, epsilon_scale=epsilon_scale)
    if epsilon is not None and delta is not None and mu is None:
        result['mu'] = solve_budget('mu', delta=delta, epsilon=epsilon)
    if n is not None and B is not None:
        if m is None:
            m = choose_m(n, B)
            result['m'] = m
        if mu is not None:
            result['mu_star'] = mu_b_star(m, n, B, mu)
    if not result:
        raise ParameterError("nothing to compute; give mu with epsilon or delta, epsilon with delta, or n with B")
    return result
