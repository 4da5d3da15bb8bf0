"""
Inference data models: samples, estimators, bootstrap configuration and
outputs, BLBQuant configuration and confidence intervals.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np

from src.errors import DataError, ParameterError
from src.models.privacy import PrivacyBudget


@dataclass(frozen=True, eq=False)
class Sample:
    """Records (one row per individual), optional +-1 labels and the declared record domain"""
    records: np.ndarray
    labels: Optional[np.ndarray] = None
    lower: Optional[float] = None
    upper: Optional[float] = None

    def __post_init__(self):
        records = np.asarray(self.records, dtype=float)
        if records.ndim == 1:
            records = records[:, None]
        if records.ndim != 2 or records.shape[0] == 0:
            raise DataError("a sample needs at least one record")
        if not np.all(np.isfinite(records)):
            raise DataError("records must be finite")
        if self.lower is not None and np.any(records < self.lower):
            raise DataError(f"records fall below the declared lower bound {self.lower}")
        if self.upper is not None and np.any(records > self.upper):
            raise DataError(f"records exceed the declared upper bound {self.upper}")
        object.__setattr__(self, 'records', records)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=float).ravel()
            if labels.shape[0] != records.shape[0]:
                raise DataError(f"{labels.shape[0]} labels for {records.shape[0]} records")
            if not np.all(np.isin(labels, (-1.0, 1.0))):
                raise DataError("labels must be -1 or +1")
            object.__setattr__(self, 'labels', labels)

    @property
    def size(self) -> int:
        return int(self.records.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.records.shape[1])

    def take(self, indices) -> 'Sample':
        """Sub-sample (with repeats) by row index"""
        indices = np.asarray(indices)
        return Sample(
            records=self.records[indices],
            labels=None if self.labels is None else self.labels[indices],
            lower=self.lower,
            upper=self.upper,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'records': self.records.tolist(),
            'labels': None if self.labels is None else self.labels.tolist(),
            'lower': self.lower,
            'upper': self.upper,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Sample':
        return cls(
            records=np.asarray(data['records'], dtype=float),
            labels=None if data.get('labels') is None else np.asarray(data['labels'], dtype=float),
            lower=data.get('lower'),
            upper=data.get('upper'),
        )


@dataclass(frozen=True)
class EstimatorSpec:
    """
    A statistic theta(.) with sensitivity Delta(k) = l / k on size-k samples.

    batch_evaluator, when present, maps (sample, index matrix of shape (B, k))
    to the (B, dimension) estimates of all resamples at once.
    """
    name: str
    dimension: int
    sensitivity_constant: float
    evaluator: Callable[[Sample], np.ndarray]
    batch_evaluator: Optional[Callable[[Sample, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.dimension}")
        if not self.sensitivity_constant > 0:
            raise ParameterError(f"sensitivity constant must be positive, got {self.sensitivity_constant}")

    def sensitivity(self, k: int) -> float:
        return self.sensitivity_constant / k

    def evaluate(self, data: Sample) -> np.ndarray:
        estimate = np.atleast_1d(np.asarray(self.evaluator(data), dtype=float))
        if estimate.shape != (self.dimension,):
            raise ParameterError(f"{self.name} returned shape {estimate.shape}, expected ({self.dimension},)")
        return estimate

    def evaluate_batch(self, data: Sample, indices: np.ndarray) -> np.ndarray:
        if self.batch_evaluator is not None:
            estimates = np.asarray(self.batch_evaluator(data, indices), dtype=float)
            return estimates.reshape(indices.shape[0], self.dimension)
        return np.stack([self.evaluate(data.take(row)) for row in indices])


@dataclass(frozen=True)
class BootstrapConfig:
    """Inputs of the private m-out-of-n bootstrap; mu is spent once per stage"""
    n: int
    m: int
    B: int
    mu: PrivacyBudget
    alpha: float = 0.05
    noise_free: bool = False

    def __post_init__(self):
        if not (1 <= self.m <= self.n):
            raise ParameterError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.B < 1:
            raise ParameterError(f"B must be at least 1, got {self.B}")
        if not 0.0 < self.alpha < 0.5:
            raise ParameterError(f"alpha must lie in (0, 0.5), got {self.alpha}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            'm': self.m,
            'B': self.B,
            'mu': self.mu.mu,
            'alpha': self.alpha,
            'noise_free': self.noise_free,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'BootstrapConfig':
        return cls(
            n=int(data['n']),
            m=int(data['m']),
            B=int(data['B']),
            mu=PrivacyBudget(float(data['mu'])),
            alpha=float(data.get('alpha', 0.05)),
            noise_free=bool(data.get('noise_free', False)),
        )


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    """Private point estimate and the B scaled replicates sqrt(m)(theta*_m - theta_bar)"""
    theta_bar: np.ndarray
    replicates: np.ndarray
    mu_star: float
    m: int
    n: int
    theta_noise_sd: float
    replicate_noise_sd: float

    @property
    def B(self) -> int:
        return int(self.replicates.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'theta_bar': self.theta_bar.tolist(),
            'replicates': self.replicates.tolist(),
            'mu_star': self.mu_star,
            'm': self.m,
            'n': self.n,
            'theta_noise_sd': self.theta_noise_sd,
            'replicate_noise_sd': self.replicate_noise_sd,
        }


@dataclass(frozen=True, eq=False)
class ConfidenceInterval:
    """Per-coordinate interval [lower, upper] at the stated level"""
    lower: np.ndarray
    upper: np.ndarray
    level: float
    center: Optional[np.ndarray] = None

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape:
            raise ParameterError("lower and upper must have the same shape")
        if np.any(lower > upper):
            raise ParameterError("interval lower end exceeds upper end")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def length(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, value) -> np.ndarray:
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return (self.lower <= value) & (value <= self.upper)

    def to_dict(self) -> Dict[str, Any]:
        def _plain(values):
            return [v if math.isfinite(v) else None for v in values.tolist()]
        return {
            'lower': _plain(self.lower),
            'upper': _plain(self.upper),
            'level': self.level,
            'center': None if self.center is None else self.center.tolist(),
        }


@dataclass(frozen=True)
class BLBConfig:
    """BLBQuant parameters: s bags, T candidate half-widths, B resamples per bag"""
    n: int
    s: int
    T: int
    B: int
    epsilon: float
    delta: float
    alpha: float = 0.1
    b_sigma: float = 5.0
    interval_scale: str = 'root_n'

    def __post_init__(self):
        if not 2 <= self.s <= self.n:
            raise ParameterError(f"need 2 <= s <= n, got s={self.s}, n={self.n}")
        if self.T < 1 or self.B < 1:
            raise ParameterError(f"T and B must be at least 1, got T={self.T}, B={self.B}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.interval_scale not in ('root_n', 'verbatim'):
            raise ParameterError(f"Unsupported interval scale: {self.interval_scale}")

    @property
    def bag_size(self) -> int:
        return self.n // self.s

    def to_dict(self) -> Dict[str, Any]:
        return {
            'n': self.n,
            's': self.s,
            'T': self.T,
            'B': self.B,
            'epsilon': self.epsilon,
            'delta': self.delta,
            'alpha': self.alpha,
            'b_sigma': self.b_sigma,
            'interval_scale': self.interval_scale,
        }


@dataclass(frozen=True, eq=False)
class BagVotes:
    """votes[t-1, i] = fraction of bag i's resamples that land in I_t"""
    votes: np.ndarray
    B: int

    def __post_init__(self):
        votes = np.asarray(self.votes, dtype=float)
        if votes.ndim != 2:
            raise ParameterError("votes must be a (T, s) matrix")
        if np.any(votes < 0) or np.any(votes > 1):
            raise ParameterError("vote fractions must lie in [0, 1]")
        if np.any(np.diff(votes, axis=0) < 0):
            raise ParameterError("vote fractions must be non-decreasing in t")
        object.__setattr__(self, 'votes', votes)

    @property
    def T(self) -> int:
        return int(self.votes.shape[0])

    @property
    def s(self) -> int:
        return int(self.votes.shape[1])
