"""
Gaussian differential privacy primitives: Gaussian trade-off curves, the
Gaussian mechanism, composition, group privacy and the (epsilon, delta)
conversion with its bisection solvers.
"""
import logging
import math
from typing import Iterable, Optional, Union

import numpy as np
from scipy import optimize, special

from src.errors import InfeasibleBudgetError, ParameterError
from src.models.privacy import GaussianMechanismSpec, PrivacyBudget, TradeoffCurve

logger = logging.getLogger(__name__)

EPSILON_BRACKET = (0.0, 500.0)
MU_BRACKET = (1e-9, 100.0)
BISECTION_TOLERANCE = 1e-9

BudgetLike = Union[PrivacyBudget, float]


def _mu_value(mu: BudgetLike) -> float:
    value = mu.mu if isinstance(mu, PrivacyBudget) else float(mu)
    if not (math.isfinite(value) and value > 0):
        raise ParameterError(f"mu must be positive and finite, got {value}")
    return value


def gaussian_tradeoff(mu: float) -> TradeoffCurve:
    """G_mu(alpha) = Phi(Phi^-1(1 - alpha) - mu); mu = 0 gives the identity 1 - alpha."""
    if not mu >= 0:
        raise ParameterError(f"mu must be nonnegative, got {mu}")
    return TradeoffCurve.gaussian(float(mu))


def gaussian_mechanism(value, spec: GaussianMechanismSpec, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. N(0, (Delta/mu)^2) noise to every coordinate of value."""
    value = np.asarray(value, dtype=float)
    return value + rng.normal(0.0, spec.noise_sd, size=value.shape)


def compose_gdp(mus: Iterable[BudgetLike]) -> PrivacyBudget:
    """Composition of mu_1..mu_k GDP mechanisms is sqrt(sum mu_i^2)-GDP."""
    values = [m.mu if isinstance(m, PrivacyBudget) else float(m) for m in mus]
    if not values:
        raise ParameterError("compose_gdp needs at least one budget")
    if any(v < 0 or not math.isfinite(v) for v in values):
        raise ParameterError(f"budgets must be nonnegative and finite, got {values}")
    return PrivacyBudget(math.hypot(*values))


def group_privacy(mu: BudgetLike, k: int) -> PrivacyBudget:
    """A mu-GDP mechanism is k*mu-GDP for groups of k records."""
    if int(k) != k or k < 1:
        raise ParameterError(f"group size k must be a positive integer, got {k}")
    return PrivacyBudget(int(k) * _mu_value(mu))


def gdp_to_dp_delta(mu: BudgetLike, epsilon: float) -> float:
    """
    delta(epsilon, mu) = Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2).

    The second term is evaluated in log space so large epsilon does not
    overflow.
    """
    mu_value = _mu_value(mu)
    if not epsilon >= 0:
        raise ParameterError(f"epsilon must be nonnegative, got {epsilon}")
    upper = special.ndtr(-epsilon / mu_value + mu_value / 2.0)
    lower = math.exp(epsilon + special.log_ndtr(-epsilon / mu_value - mu_value / 2.0))
    return float(min(max(upper - lower, 0.0), 1.0))


def solve_budget(solve_for: str, *, delta: float, mu: Optional[BudgetLike] = None,
                 epsilon: Optional[float] = None, epsilon_scale: float = 1.0) -> float:
    """
    Solve delta(scale * epsilon, mu) = delta for epsilon, or delta(epsilon, mu) = delta for mu.

    Bisection to absolute tolerance 1e-9 on [0, 500] (epsilon) or
    [1e-9, 100] (mu). With the default scale of 1 the epsilon solve returns
    the total epsilon reported next to a mu-GDP guarantee.
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")

    if solve_for == 'epsilon':
        if mu is None:
            raise ParameterError("solving for epsilon needs mu")
        if not epsilon_scale > 0:
            raise ParameterError(f"epsilon_scale must be positive, got {epsilon_scale}")
        mu_value = _mu_value(mu)
        lo, hi = EPSILON_BRACKET
        ceiling = gdp_to_dp_delta(mu_value, 0.0)
        if delta >= ceiling:
            raise InfeasibleBudgetError(
                f"delta={delta} is not below delta(0, mu={mu_value})={ceiling:.6g}", bound='epsilon_lower')
        if gdp_to_dp_delta(mu_value, epsilon_scale * hi) > delta:
            raise InfeasibleBudgetError(
                f"delta={delta} needs epsilon beyond {hi / epsilon_scale:g}", bound='epsilon_upper')
        root = optimize.bisect(lambda e: gdp_to_dp_delta(mu_value, epsilon_scale * e) - delta,
                               lo, hi / epsilon_scale, xtol=BISECTION_TOLERANCE)
        logger.debug(f"Solved epsilon={root:.9f} for mu={mu_value}, delta={delta}")
        return float(root)

    if solve_for == 'mu':
        if epsilon is None or not epsilon >= 0:
            raise ParameterError(f"solving for mu needs a nonnegative epsilon, got {epsilon}")
        lo, hi = MU_BRACKET
        if gdp_to_dp_delta(lo, epsilon) >= delta:
            raise InfeasibleBudgetError(
                f"delta={delta} is already exceeded at mu={lo:g}", bound='mu_lower')
        if gdp_to_dp_delta(hi, epsilon) <= delta:
            raise InfeasibleBudgetError(
                f"delta={delta} is not reached by mu={hi:g}", bound='mu_upper')
        root = optimize.bisect(lambda m: gdp_to_dp_delta(m, epsilon) - delta,
                               lo, hi, xtol=BISECTION_TOLERANCE)
        logger.debug(f"Solved mu={root:.9f} for epsilon={epsilon}, delta={delta}")
        return float(root)

    raise ParameterError(f"Unsupported solve target: {solve_for}")
