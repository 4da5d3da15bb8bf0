"""
BLBQuant: a bag-of-little-bootstraps quantile release through the
AboveThr sparse-vector mechanism, used as the (epsilon, delta)-DP baseline.

The sample is cut into s disjoint bags. Each bag is resampled B times at
the full size n, every resample estimate is privatized, and for each
candidate half-width t the bag votes with the fraction of resamples that
land within t of the bag estimate. AboveThr releases the first t whose
noisy order statistic of the votes clears tau.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple

import numpy as np

from src.errors import ParameterError
from src.models.inference import BagVotes, BLBConfig, ConfidenceInterval, EstimatorSpec, Sample
from src.models.privacy import GaussianMechanismSpec, PrivacyBudget
from src.services.gdp_core import gaussian_mechanism, solve_budget

logger = logging.getLogger(__name__)

DEFAULT_RESAMPLES = 500


def blb_params(n: int, epsilon: float, b_sigma: float) -> Tuple[int, int]:
    """s = min(max(2, floor(10 ln(n) / epsilon)), n) bags and T = ceil(5 b_sigma sqrt(n)) candidates"""
    if int(n) != n or n < 2:
        raise ParameterError(f"n must be an integer of at least 2, got {n}")
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    if not b_sigma > 0:
        raise ParameterError(f"b_sigma must be positive, got {b_sigma}")
    s = min(max(2, math.floor(10.0 * math.log(n) / epsilon)), int(n))
    T = math.ceil(5.0 * b_sigma * math.sqrt(n))
    return s, T


def make_blb_config(n: int, epsilon: float, delta: float, alpha: float = 0.1, B: int = DEFAULT_RESAMPLES,
                    b_sigma: float = 5.0, interval_scale: str = 'root_n') -> BLBConfig:
    s, T = blb_params(n, epsilon, b_sigma)
    return BLBConfig(n=int(n), s=s, T=T, B=int(B), epsilon=float(epsilon), delta=float(delta),
                     alpha=float(alpha), b_sigma=float(b_sigma), interval_scale=interval_scale)


def draw_above_threshold_noise(s: int, T: int, epsilon: float,
                               rng: np.random.Generator) -> Tuple[float, np.ndarray]:
    """xi_0 ~ Lap(s/2, 2/epsilon) and xi_1..xi_T ~ Lap(0, 4/epsilon), i.i.d."""
    xi0 = float(rng.laplace(s / 2.0, 2.0 / epsilon))
    xi = rng.laplace(0.0, 4.0 / epsilon, size=T)
    return xi0, xi


def above_threshold(votes: BagVotes, tau: float, xi0: float, xi: Sequence[float]) -> Optional[int]:
    """
    First t (1-based) whose noisy order statistic y_(floor(xi0 + xi_t))(t) is at least tau.

    An index sum below 1 reads as -inf and one above s as +inf. Returns None
    when no t qualifies.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (votes.T,):
        raise ParameterError(f"need one noise value per candidate, got {xi.shape[0]} for T={votes.T}")
    ordered = np.sort(votes.votes, axis=1)
    totals = xi0 + xi
    index = np.clip(np.floor(totals).astype(int), 1, votes.s) - 1
    noisy = ordered[np.arange(votes.T), index]
    noisy = np.where(totals < 1, -np.inf, noisy)
    noisy = np.where(totals > votes.s, np.inf, noisy)
    hits = np.flatnonzero(noisy >= tau)
    return int(hits[0]) + 1 if hits.size else None


def bag_votes(distances: np.ndarray, config: BLBConfig) -> BagVotes:
    """
    Hit fractions from |theta_hat_m - theta*_j|, shape (s, B).

    root_n: a resample hits I_t iff sqrt(n)|theta_hat_m - theta*_j| <= t.
    verbatim: iff |sqrt(n)(theta_hat_m - theta*_j)| <= t sqrt(n).
    """
    scale = math.sqrt(config.n) if config.interval_scale == 'root_n' else 1.0
    scaled = np.sort(np.asarray(distances, dtype=float) * scale, axis=1)
    candidates = np.arange(1, config.T + 1, dtype=float)
    counts = np.stack([np.searchsorted(row, candidates, side='right') for row in scaled], axis=1)
    return BagVotes(votes=counts / scaled.shape[1], B=scaled.shape[1])


def _half_width(t_bar: int, config: BLBConfig) -> float:
    if config.interval_scale == 'root_n':
        return t_bar / math.sqrt(config.n)
    return float(t_bar)


def blbquant_ci(data: Sample, estimator: EstimatorSpec, config: BLBConfig, rng: np.random.Generator,
                workers: int = 1, threshold_noise: Optional[Tuple[float, Sequence[float]]] = None) -> ConfidenceInterval:
    """
    Symmetric interval theta_bar +- half_width(t_bar) at level 1 - alpha, coordinate-wise.

    theta_bar and every resample estimate use the Gaussian mechanism with
    mu_tilde solving delta(epsilon, mu_tilde) = delta. threshold_noise
    replaces the Laplace draws of AboveThr (same values for every coordinate).
    """
    if data.size != config.n:
        raise ParameterError(f"sample has {data.size} records but the config says n={config.n}")
    if config.n < 2 * config.s:
        raise ParameterError(f"n={config.n} is too small for s={config.s} bags; need n >= 2s")

    mu_tilde = solve_budget('mu', delta=config.delta, epsilon=config.epsilon)
    noise = GaussianMechanismSpec(estimator.sensitivity(config.n), PrivacyBudget(mu_tilde))
    bag_size = config.bag_size
    partition_stream, point_stream, threshold_stream, *bag_streams = rng.spawn(3 + config.s)

    bags = partition_stream.permutation(config.n)[:config.s * bag_size].reshape(config.s, bag_size)
    theta_bar = gaussian_mechanism(estimator.evaluate(data), noise, point_stream)

    def run(bag: np.ndarray, stream: np.random.Generator) -> np.ndarray:
        bag_sample = data.take(bag)
        theta_m = estimator.evaluate(bag_sample)
        indices = stream.integers(0, bag_size, size=(config.B, config.n))
        stars = gaussian_mechanism(estimator.evaluate_batch(bag_sample, indices), noise, stream)
        return np.abs(theta_m - stars)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            distances = np.stack(list(pool.map(run, bags, bag_streams)))
    else:
        distances = np.stack([run(bag, stream) for bag, stream in zip(bags, bag_streams)])

    tau = 1.0 - config.alpha
    lower = np.empty(estimator.dimension)
    upper = np.empty(estimator.dimension)
    for coord in range(estimator.dimension):
        votes = bag_votes(distances[:, :, coord], config)
        if threshold_noise is None:
            xi0, xi = draw_above_threshold_noise(config.s, config.T, config.epsilon, threshold_stream)
        else:
            xi0, xi = threshold_noise
        t_bar = above_threshold(votes, tau, xi0, xi)
        if t_bar is None:
            logger.warning(f"AboveThr found no candidate for coordinate {coord}; returning the whole line")
            lower[coord], upper[coord] = -np.inf, np.inf
            continue
        half = _half_width(t_bar, config)
        lower[coord], upper[coord] = theta_bar[coord] - half, theta_bar[coord] + half

    logger.debug(f"BLBQuant n={config.n}, s={config.s}, T={config.T}, mu_tilde={mu_tilde:.4g}")
    return ConfidenceInterval(lower=lower, upper=upper, level=tau, center=theta_bar)
