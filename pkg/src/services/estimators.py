"""
Statistics with known sensitivity laws and the scenario samplers.

Both estimators can evaluate a whole batch of resamples at once, which is
what keeps the bootstrap engines vectorized.
"""
import logging
import math
from typing import Any, Callable, Dict, Tuple

import numpy as np
from scipy import special

from src.errors import ConvergenceError, DataError, ParameterError
from src.models.inference import EstimatorSpec, Sample

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 100_000
ARMIJO_C1 = 1e-4
BACKTRACK_FACTOR = 0.5
BATCH_ELEMENT_CAP = 4_000_000

# Logistic law used to label the 17-dimensional synthetic scenario
TRUE_THETA_17D = np.concatenate([[0.0], np.full(8, 5.0), np.full(8, -5.0)])


# Bounded mean

def bounded_mean_estimator(lower: float, upper: float, dimension: int = 1) -> EstimatorSpec:
    """Arithmetic mean of records in [lower, upper]; one changed record moves it by at most (upper - lower)/k."""
    if not lower < upper:
        raise ParameterError(f"lower must be below upper, got [{lower}, {upper}]")

    def evaluate(data: Sample) -> np.ndarray:
        return data.records.mean(axis=0)

    def evaluate_batch(data: Sample, indices: np.ndarray) -> np.ndarray:
        rows_per_chunk = max(1, BATCH_ELEMENT_CAP // (indices.shape[1] * data.dimension))
        out = np.empty((indices.shape[0], data.dimension))
        for start in range(0, indices.shape[0], rows_per_chunk):
            chunk = indices[start:start + rows_per_chunk]
            out[start:start + chunk.shape[0]] = data.records[chunk].mean(axis=1)
        return out

    return EstimatorSpec(
        name='bounded_mean',
        dimension=dimension,
        sensitivity_constant=float(upper - lower),
        evaluator=evaluate,
        batch_evaluator=evaluate_batch,
    )


# Ridge-regularized logistic regression

def _require_labels(data: Sample) -> np.ndarray:
    if data.labels is None:
        raise DataError("logistic regression needs labels in {-1, +1}")
    return data.labels


def logistic_objective(theta, data: Sample) -> float:
    """(1/n) sum log(1 + exp(-y_i theta'x_i)) + ||theta||^2"""
    labels = _require_labels(data)
    theta = np.asarray(theta, dtype=float)
    margins = labels * (data.records @ theta)
    return float(np.logaddexp(0.0, -margins).mean() + theta @ theta)


def logistic_gradient(theta, data: Sample) -> np.ndarray:
    labels = _require_labels(data)
    theta = np.asarray(theta, dtype=float)
    margins = labels * (data.records @ theta)
    weights = special.expit(-margins) * labels
    return -(data.records.T @ weights) / data.size + 2.0 * theta


def _solve_logistic_batch(features: np.ndarray, labels: np.ndarray, tolerance: float,
                          max_iterations: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Gradient descent from 0 with Armijo backtracking on c independent problems.

    features has shape (c, k, d), labels (c, k). Each problem backtracks on
    its own step, starting from 1 and stopping at the Armijo condition or at
    the smoothness step 1/(2 + max||x||^2/4), whichever comes first.
    """
    count, k, dim = features.shape
    signed = features * labels[..., None]
    theta = np.zeros((count, dim))
    safe_step = 1.0 / (2.0 + np.max(np.sum(features ** 2, axis=2), axis=1) / 4.0)

    def objective(th):
        margins = np.einsum('ckd,cd->ck', signed, th)
        return np.logaddexp(0.0, -margins).mean(axis=1) + np.sum(th ** 2, axis=1)

    def gradient(th):
        margins = np.einsum('ckd,cd->ck', signed, th)
        return -np.einsum('ck,ckd->cd', special.expit(-margins), signed) / k + 2.0 * th

    grad = gradient(theta)
    norms = np.linalg.norm(grad, axis=1)
    for iteration in range(max_iterations):
        active = norms > tolerance
        if not active.any():
            return theta, norms, iteration
        current = objective(theta)
        squared = norms ** 2
        step = np.ones(count)
        while True:
            candidate = theta - step[:, None] * grad
            accepted = (objective(candidate) <= current - ARMIJO_C1 * step * squared) | (step <= safe_step) | ~active
            if accepted.all():
                break
            step = np.where(accepted, step, np.maximum(step * BACKTRACK_FACTOR, safe_step))
        theta = np.where(active[:, None], candidate, theta)
        grad = gradient(theta)
        norms = np.linalg.norm(grad, axis=1)

    if np.all(norms <= tolerance):
        return theta, norms, max_iterations
    worst = float(norms.max())
    raise ConvergenceError(
        f"logistic solver stopped after {max_iterations} iterations with gradient norm {worst:.3e}",
        gradient_norm=worst,
        iterations=max_iterations,
    )


def fit_regularized_logistic(data: Sample, tolerance: float = DEFAULT_TOLERANCE,
                             max_iterations: int = DEFAULT_MAX_ITERATIONS) -> np.ndarray:
    """Minimizer of the ridge-logistic objective; 2-strongly convex, so it is unique."""
    if not tolerance > 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")
    labels = _require_labels(data)
    theta, norms, iterations = _solve_logistic_batch(
        data.records[None, ...], labels[None, :], tolerance, int(max_iterations))
    logger.debug(f"Logistic fit converged in {iterations} iterations, gradient norm {norms[0]:.2e}")
    return theta[0]


def regularized_logistic_estimator(dimension: int = 2, tolerance: float = DEFAULT_TOLERANCE,
                                   max_iterations: int = DEFAULT_MAX_ITERATIONS) -> EstimatorSpec:
    """Ridge-logistic estimator with sensitivity 1/k for covariates in the unit ball."""

    def evaluate(data: Sample) -> np.ndarray:
        return fit_regularized_logistic(data, tolerance, max_iterations)

    def evaluate_batch(data: Sample, indices: np.ndarray) -> np.ndarray:
        labels = _require_labels(data)
        rows_per_chunk = max(1, BATCH_ELEMENT_CAP // (indices.shape[1] * data.dimension))
        out = np.empty((indices.shape[0], data.dimension))
        for start in range(0, indices.shape[0], rows_per_chunk):
            chunk = indices[start:start + rows_per_chunk]
            theta, _, _ = _solve_logistic_batch(data.records[chunk], labels[chunk], tolerance, int(max_iterations))
            out[start:start + chunk.shape[0]] = theta
        return out

    return EstimatorSpec(
        name='regularized_logistic',
        dimension=dimension,
        sensitivity_constant=1.0,
        evaluator=evaluate,
        batch_evaluator=evaluate_batch,
    )


# Samplers

def _truncated_normal_draws(lower: float, upper: float, size: int, rng: np.random.Generator) -> np.ndarray:
    acceptance = special.ndtr(upper) - special.ndtr(lower)
    kept = []
    missing = size
    while missing > 0:
        batch = rng.standard_normal(int(math.ceil(missing / acceptance * 1.1)) + 16)
        batch = batch[(batch >= lower) & (batch <= upper)][:missing]
        kept.append(batch)
        missing -= batch.size
    return np.concatenate(kept)


def sample_truncated_normal(lower: float, upper: float, count: int, rng: np.random.Generator) -> Sample:
    """N(0, 1) conditioned on [lower, upper], by rejection."""
    if not lower < upper:
        raise ParameterError(f"lower must be below upper, got [{lower}, {upper}]")
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    return Sample(records=_truncated_normal_draws(lower, upper, count, rng)[:, None], lower=lower, upper=upper)


def synthesize_logistic_17d(count: int, rng: np.random.Generator) -> Sample:
    """x = (1, x1, x2)/sqrt(17) with x1 ~ 8 truncated N(0,1) on [0,1], x2 ~ 8 U[0,1]; P(y=1|x) = expit(theta'x)."""
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    truncated = _truncated_normal_draws(0.0, 1.0, 8 * count, rng).reshape(count, 8)
    uniform = rng.uniform(0.0, 1.0, size=(count, 8))
    covariates = np.hstack([np.ones((count, 1)), truncated, uniform]) / math.sqrt(17.0)
    probability = special.expit(covariates @ TRUE_THETA_17D)
    labels = np.where(rng.uniform(size=count) < probability, 1.0, -1.0)
    return Sample(records=covariates, labels=labels, lower=0.0, upper=1.0 / math.sqrt(17.0))


# Sensitivity monitor

def observed_sensitivity(estimator: EstimatorSpec, sampler: Callable[[int, np.random.Generator], Sample],
                         k: int, pairs: int, rng: np.random.Generator) -> Dict[str, Any]:
    """
    Largest per-coordinate change of the estimator over random neighbouring pairs
    of size k, relative to the claimed sensitivity l/k.
    """
    bound = estimator.sensitivity(k)
    worst = 0.0
    violations = 0
    for _ in range(pairs):
        sample = sampler(k, rng)
        replacement = sampler(1, rng)
        position = int(rng.integers(k))
        records = sample.records.copy()
        records[position] = replacement.records[0]
        labels = None
        if sample.labels is not None:
            labels = sample.labels.copy()
            labels[position] = replacement.labels[0]
        neighbour = Sample(records=records, labels=labels, lower=sample.lower, upper=sample.upper)
        change = float(np.max(np.abs(estimator.evaluate(sample) - estimator.evaluate(neighbour))))
        worst = max(worst, change)
        if change > bound * (1.0 + 1e-9):
            violations += 1

    if violations:
        logger.warning(f"{estimator.name}: {violations}/{pairs} neighbouring pairs exceeded l/k={bound:.3g}")
    return {
        'estimator': estimator.name,
        'k': k,
        'pairs': pairs,
        'bound': bound,
        'max_change': worst,
        'ratio': worst / bound,
        'violations': violations,
    }
