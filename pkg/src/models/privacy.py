"""
Privacy data models: GDP budgets, (epsilon, delta) pairs, Gaussian mechanism
calibration and trade-off curves.

These are plain value objects. The numerical work on them lives in
services/gdp_core.py and services/tradeoff_calculus.py.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import special

from src.errors import CurveValidationError, ParameterError

GRID_SIZE = 2048
MIN_GRID_POINTS = 1001
CURVE_TOLERANCE = 1e-9


def standard_grid() -> np.ndarray:
    """Uniform abscissae on [0, 1], endpoints included"""
    return np.linspace(0.0, 1.0, GRID_SIZE)


@dataclass(frozen=True)
class PrivacyBudget:
    """A mu-GDP budget"""
    mu: float

    def __post_init__(self):
        if not (isinstance(self.mu, (int, float, np.floating)) and math.isfinite(self.mu) and self.mu > 0):
            raise ParameterError(f"mu must be positive and finite, got {self.mu}")

    def to_dict(self) -> Dict[str, Any]:
        return {'mu': float(self.mu)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PrivacyBudget':
        return cls(mu=float(data['mu']))


@dataclass(frozen=True)
class DPParameters:
    """An (epsilon, delta) guarantee"""
    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise ParameterError(f"delta must lie in [0, 1], got {self.delta}")

    def to_dict(self) -> Dict[str, Any]:
        return {'epsilon': float(self.epsilon), 'delta': float(self.delta)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DPParameters':
        return cls(epsilon=float(data['epsilon']), delta=float(data['delta']))


@dataclass(frozen=True)
class GaussianMechanismSpec:
    """Noise calibration for releasing a statistic of sensitivity Delta under mu-GDP"""
    sensitivity: float
    mu: PrivacyBudget

    def __post_init__(self):
        if not self.sensitivity >= 0:
            raise ParameterError(f"sensitivity must be nonnegative, got {self.sensitivity}")

    @property
    def noise_sd(self) -> float:
        return self.sensitivity / self.mu.mu

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sensitivity': float(self.sensitivity),
            'mu': float(self.mu.mu),
            'noise_sd': self.noise_sd,
        }


@dataclass(frozen=True)
class MixtureWeights:
    """Probability weights of a trade-off mixture"""
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ParameterError("mixture weights must be a non-empty vector")
        if np.any(p < 0):
            raise ParameterError("mixture weights must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError(f"mixture weights must sum to 1, got {p.sum()!r}")
        object.__setattr__(self, 'probabilities', p)

    @classmethod
    def normalized(cls, raw) -> 'MixtureWeights':
        """Rescale nonnegative raw weights to sum to one"""
        p = np.asarray(raw, dtype=float)
        total = p.sum()
        if total <= 0:
            raise ParameterError("mixture weights must have positive mass")
        p = p / total
        # absorb the last rounding error into the largest weight
        p[np.argmax(p)] += 1.0 - p.sum()
        return cls(p)

    def __len__(self) -> int:
        return int(self.probabilities.size)


@dataclass(frozen=True)
class InclusionProbabilities:
    """Law of how often one record enters a size-m resample of n records"""
    m: int
    n: int
    p: np.ndarray

    @property
    def p0(self) -> float:
        return float(self.p[0])

    def mean_count(self) -> float:
        return float(np.dot(np.arange(self.p.size), self.p))

    def to_dict(self) -> Dict[str, Any]:
        return {'m': self.m, 'n': self.n, 'p': self.p.tolist()}


@dataclass(frozen=True)
class Functionals:
    """kl, kappa2, kappa3 (and the centred kappa3) of a trade-off curve"""
    kl: float
    kappa2: float
    kappa3: float
    kappa3_bar: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kl': self.kl,
            'kappa2': self.kappa2,
            'kappa3': self.kappa3,
            'kappa3_bar': self.kappa3_bar,
        }


@dataclass(frozen=True, eq=False)
class TradeoffCurve:
    """
    A trade-off function f: [0, 1] -> [0, 1].

    Gaussian and identity curves are analytic. Grid curves carry ordinates on
    strictly increasing abscissae and are evaluated by linear interpolation.
    A grid curve built from Gaussian pieces keeps them in `components` as
    (weight, mu) pairs.
    """
    kind: str
    mu: float = 0.0
    alphas: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    components: Optional[Tuple[Tuple[float, float], ...]] = None
    label: str = ''

    def __post_init__(self):
        if self.kind not in ('gaussian', 'identity', 'grid'):
            raise ParameterError(f"Unsupported curve kind: {self.kind}")
        if self.kind == 'gaussian' and not (math.isfinite(self.mu) and self.mu >= 0):
            raise ParameterError(f"mu must be nonnegative and finite, got {self.mu}")
        if self.kind == 'grid':
            if self.alphas is None or self.values is None:
                raise ParameterError("grid curves need abscissae and ordinates")
            alphas = np.asarray(self.alphas, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if alphas.shape != values.shape or alphas.ndim != 1:
                raise ParameterError("abscissae and ordinates must be matching vectors")
            if alphas.size < MIN_GRID_POINTS:
                raise ParameterError(f"grid curves need at least {MIN_GRID_POINTS} points, got {alphas.size}")
            if np.any(np.diff(alphas) <= 0) or alphas[0] < 0 or alphas[-1] > 1:
                raise ParameterError("abscissae must be strictly increasing inside [0, 1]")
            object.__setattr__(self, 'alphas', alphas)
            object.__setattr__(self, 'values', np.clip(values, 0.0, 1.0))

    # Constructors
    @classmethod
    def gaussian(cls, mu: float) -> 'TradeoffCurve':
        if mu == 0:
            return cls.identity()
        return cls(kind='gaussian', mu=float(mu), label=f"G_{mu:g}")

    @classmethod
    def identity(cls) -> 'TradeoffCurve':
        return cls(kind='identity', label='Id')

    @classmethod
    def from_grid(cls, alphas, values, components=None, label: str = 'grid') -> 'TradeoffCurve':
        return cls(kind='grid', alphas=np.asarray(alphas, dtype=float),
                   values=np.asarray(values, dtype=float), components=components, label=label)

    # Evaluation
    def __call__(self, alpha):
        a = np.clip(np.asarray(alpha, dtype=float), 0.0, 1.0)
        if self.kind == 'identity':
            out = 1.0 - a
        elif self.kind == 'gaussian':
            out = special.ndtr(-special.ndtri(a) - self.mu)
        else:
            out = np.interp(a, self.alphas, self.values)
        return out if out.ndim else float(out)

    def grid_points(self) -> Tuple[np.ndarray, np.ndarray]:
        """Abscissae and ordinates; analytic curves are sampled on the standard grid"""
        if self.kind == 'grid':
            return self.alphas, self.values
        alphas = standard_grid()
        return alphas, self(alphas)

    @property
    def is_gaussian_family(self) -> bool:
        return self.kind in ('gaussian', 'identity') or self.components is not None

    def validate(self, tolerance: float = CURVE_TOLERANCE) -> 'TradeoffCurve':
        """Check non-increasing, convex and below the identity; returns self"""
        alphas, values = self.grid_points()
        if np.any(np.diff(values) > tolerance):
            raise CurveValidationError(f"{self.label or self.kind} is not non-increasing")
        slopes = np.diff(values) / np.diff(alphas)
        if np.any(np.diff(slopes) * np.diff(alphas)[1:] < -tolerance):
            raise CurveValidationError(f"{self.label or self.kind} is not convex")
        if np.any(values > 1.0 - alphas + tolerance):
            raise CurveValidationError(f"{self.label or self.kind} exceeds the identity trade-off")
        return self

    def to_dict(self, points: int = 11) -> Dict[str, Any]:
        """Convert to dictionary for API responses"""
        sample = np.linspace(0.0, 1.0, points)
        return {
            'kind': self.kind,
            'mu': self.mu if self.kind == 'gaussian' else None,
            'label': self.label,
            'alpha': sample.tolist(),
            'f_alpha': np.atleast_1d(self(sample)).tolist(),
        }


@dataclass(frozen=True)
class CompositionLimit:
    """Terms of the CLT-type limit for B composed bootstrap replicates"""
    B: int
    mu_star: float
    K: float
    s: float
    mu_eff: float
    remainder: float
    max_kl: float
    kappa3_sum: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'B': self.B,
            'mu_star': self.mu_star,
            'K': self.K,
            's': self.s,
            'mu_eff': self.mu_eff,
            'remainder': self.remainder,
            'max_kl': self.max_kl,
            'kappa3_sum': self.kappa3_sum,
        }
