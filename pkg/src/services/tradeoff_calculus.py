"""
Trade-off curve calculus behind the privacy guarantee of the m-out-of-n
bootstrap.

A single bootstrap replicate sees each record i times with binomial
probability p_{m,i}. Its trade-off curve is C_{1-p0}(mix(p_{m,i}/(1-p0),
G_{i mu*})): a mixture over inclusion counts, tilted towards the identity by
the chance that the record is left out, then convexified. Composing B such
curves tends to G_mu, which asymptotic_privacy_check evaluates numerically.

All curves are sampled on the standard 2048-point grid.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import special, stats

from src.errors import DegenerateCurveError, ParameterError
from src.models.privacy import (
    CompositionLimit,
    Functionals,
    InclusionProbabilities,
    MixtureWeights,
    PrivacyBudget,
    TradeoffCurve,
    standard_grid,
)
from src.services.gdp_core import gaussian_tradeoff

logger = logging.getLogger(__name__)

TAIL_MASS = 1e-12
SWEEP_POINTS = 4096


def _positive_int(name: str, value) -> int:
    if int(value) != value or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value}")
    return int(value)


def _mu_value(mu) -> float:
    return mu.mu if isinstance(mu, PrivacyBudget) else PrivacyBudget(float(mu)).mu


# Inclusion law and per-replicate budget

def bootstrap_inclusion_probs(m: int, n: int) -> InclusionProbabilities:
    """p_{m,i} = C(m,i) (1/n)^i (1-1/n)^(m-i) for i = 0..m, via the binomial log-pmf."""
    m = _positive_int('m', m)
    n = _positive_int('n', n)
    counts = np.arange(m + 1)
    p = np.exp(stats.binom.logpmf(counts, m, 1.0 / n))
    return InclusionProbabilities(m=m, n=n, p=p)


def _subsampling_factor(m: int, n: int) -> float:
    # (1 - (1-1/n)^m) * ((n+m-1)/n) * (m/n)
    hit = -math.expm1(m * math.log1p(-1.0 / n)) if n > 1 else 1.0
    return hit * ((n + m - 1) / n) * (m / n)


def mu_b_star(m: int, n: int, B: int, mu) -> float:
    """Per-replicate budget that makes B subsampled replicates mu-GDP in the limit."""
    m = _positive_int('m', m)
    n = _positive_int('n', n)
    B = _positive_int('B', B)
    return _mu_value(mu) / math.sqrt(B * _subsampling_factor(m, n))


def replicate_noise_variance(m: int, n: int, B: int, mu, sensitivity_constant: float) -> float:
    """sigma^2_{m,B} = B (1-(1-1/n)^m) ((n+m-1)/n) l^2 / (m n mu^2)."""
    m = _positive_int('m', m)
    n = _positive_int('n', n)
    B = _positive_int('B', B)
    mu_value = _mu_value(mu)
    hit = -math.expm1(m * math.log1p(-1.0 / n)) if n > 1 else 1.0
    return B * hit * ((n + m - 1) / n) * sensitivity_constant ** 2 / (m * n * mu_value ** 2)


# Mixtures

def _log_slopes_on_grid(curve: TradeoffCurve) -> np.ndarray:
    """log|f'| values a component passes through at its own grid resolution"""
    if curve.kind == 'identity':
        return np.array([0.0])
    if curve.kind == 'gaussian':
        interior = standard_grid()[1:-1]
        z = -special.ndtri(interior)
        return curve.mu * z - curve.mu ** 2 / 2.0
    slopes = np.diff(curve.values) / np.diff(curve.alphas)
    slopes = slopes[slopes < 0]
    return np.log(-slopes)


def _argslope(curve: TradeoffCurve, log_slopes: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Points where the curve has subgradient -exp(log_slope).

    Gaussian curves are inverted in closed form; grid curves by binary search
    over their (monotone) segment slopes.
    """
    if curve.kind == 'identity':
        alphas = np.where(log_slopes > 0, 0.0, 1.0)
        return alphas, 1.0 - alphas
    if curve.kind == 'gaussian':
        mu = curve.mu
        z = (log_slopes + mu ** 2 / 2.0) / mu
        return special.ndtr(-z), special.ndtr(z - mu)
    slopes = np.diff(curve.values) / np.diff(curve.alphas)
    with np.errstate(divide='ignore'):
        segment_logs = np.log(np.maximum(-slopes, 0.0))
    # segment_logs is non-increasing for a convex curve
    vertex = np.searchsorted(-segment_logs, -log_slopes, side='left')
    return curve.alphas[vertex], curve.values[vertex]


def _flatten_components(weights: np.ndarray, curves: Sequence[TradeoffCurve]):
    flat = []
    for w, curve in zip(weights, curves):
        if curve.kind == 'identity':
            flat.append((float(w), 0.0))
        elif curve.kind == 'gaussian':
            flat.append((float(w), curve.mu))
        elif curve.components is not None:
            flat.extend((float(w) * cw, cmu) for cw, cmu in curve.components)
        else:
            return None
    return tuple(flat)


def mix_tradeoff(weights: MixtureWeights, curves: Sequence[TradeoffCurve]) -> TradeoffCurve:
    """
    mix(p, f)(alpha) for curves sharing a common subgradient.

    For each slope t < 0 every component is moved to the point alpha_i(t)
    where it has subgradient t; the mixture passes through
    (sum p_i alpha_i(t), sum p_i f_i(alpha_i(t))). Slopes are swept on a
    log-spaced grid merged with the slopes every component takes on the
    standard abscissae, then the points are re-gridded.
    """
    if len(weights) != len(curves):
        raise ParameterError(f"got {len(weights)} weights for {len(curves)} curves")
    for curve in curves:
        curve.validate()

    p = weights.probabilities
    keep = p > 0
    active = [c for c, k in zip(curves, keep) if k]
    p_active = p[keep]

    per_curve = [_log_slopes_on_grid(c) for c in active]
    finite = np.concatenate([ls[np.isfinite(ls)] for ls in per_curve] + [np.array([0.0])])
    sweep = np.linspace(finite.min(), finite.max(), SWEEP_POINTS)
    log_slopes = np.unique(np.concatenate([finite, sweep]))[::-1]

    mix_alpha = np.zeros_like(log_slopes)
    mix_value = np.zeros_like(log_slopes)
    start = 0.0
    for w, curve in zip(p_active, active):
        alphas, values = _argslope(curve, log_slopes)
        mix_alpha += w * alphas
        mix_value += w * values
        start += w * float(curve(0.0))

    xs = np.concatenate([[0.0], np.maximum.accumulate(mix_alpha), [1.0]])
    ys = np.concatenate([[start], mix_value, [0.0]])
    xs, first = np.unique(xs, return_index=True)
    ys = ys[first]

    grid = standard_grid()
    values = np.interp(grid, xs, ys)
    components = _flatten_components(p_active, active)
    logger.debug(f"Mixed {len(active)} curves over {log_slopes.size} slopes")
    return TradeoffCurve.from_grid(grid, values, components=components, label='mix')


# Subsampling operator

def _inverse_on_grid(alphas: np.ndarray, values: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Left-continuous inverse inf{alpha : f(alpha) <= y} of the linear interpolant."""
    idx = np.searchsorted(-values, -targets, side='left')
    at_start = idx == 0
    idx = np.clip(idx, 1, alphas.size - 1)
    f_hi = values[idx - 1]
    f_lo = values[idx]
    a_lo = alphas[idx - 1]
    a_hi = alphas[idx]
    drop = f_hi - f_lo
    safe = np.where(drop > 0, drop, 1.0)
    weight = np.where(drop > 0, (f_hi - targets) / safe, 1.0)
    inverse = a_lo + np.clip(weight, 0.0, 1.0) * (a_hi - a_lo)
    return np.where(at_start, 0.0, inverse)


def _lower_hull(xs: np.ndarray, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Monotone-chain lower convex hull of points sorted by x."""
    hull_x: List[float] = []
    hull_y: List[float] = []
    for x, y in zip(xs.tolist(), ys.tolist()):
        while len(hull_x) >= 2:
            cross = (hull_x[-1] - hull_x[-2]) * (y - hull_y[-2]) - (hull_y[-1] - hull_y[-2]) * (x - hull_x[-2])
            if cross > 0:
                break
            hull_x.pop()
            hull_y.pop()
        hull_x.append(x)
        hull_y.append(y)
    return np.array(hull_x), np.array(hull_y)


def cp_operator(curve: TradeoffCurve, p: float) -> TradeoffCurve:
    """
    C_p(f) = lower convex envelope of min{f_p, f_p^-1}, with f_p = p f + (1-p)(1-x).

    p is the probability that the record is used at all; p = 0 is perfect
    privacy.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    curve.validate()

    alphas, values = curve.grid_points()
    tilted = p * values + (1.0 - p) * (1.0 - alphas)
    inverse = _inverse_on_grid(alphas, tilted, alphas)
    lowest = np.minimum(tilted, inverse)
    hull_x, hull_y = _lower_hull(alphas, lowest)

    grid = standard_grid()
    return TradeoffCurve.from_grid(grid, np.interp(grid, hull_x, hull_y), label=f"C_{p:.4g}")


# Bootstrap replicate curve

def _mixture_support(probs: InclusionProbabilities) -> int:
    tail_after = np.cumsum(probs.p[::-1])[::-1] - probs.p
    below = np.nonzero(tail_after[1:] < TAIL_MASS)[0]
    return int(below[0]) + 1 if below.size else probs.m


def bootstrap_mixture_curve(m: int, n: int, mu_star: float) -> TradeoffCurve:
    """f_> = mix(p_{m,i}/(1-p0), G_{i mu*}) over inclusion counts i >= 1."""
    if not mu_star > 0:
        raise ParameterError(f"mu_star must be positive, got {mu_star}")
    probs = bootstrap_inclusion_probs(m, n)
    top = _mixture_support(probs)
    weights = MixtureWeights.normalized(probs.p[1:top + 1])
    curves = [gaussian_tradeoff(i * mu_star) for i in range(1, top + 1)]
    return mix_tradeoff(weights, curves)


def bootstrap_privacy_curve(m: int, n: int, mu_star: float) -> TradeoffCurve:
    """Trade-off curve of one private m-out-of-n replicate at budget mu_star."""
    probs = bootstrap_inclusion_probs(m, n)
    mixture = bootstrap_mixture_curve(m, n, mu_star)
    curve = cp_operator(mixture, 1.0 - probs.p0)
    logger.info(f"Built bootstrap privacy curve for m={m}, n={n}, mu*={mu_star:.6g}")
    return TradeoffCurve.from_grid(curve.alphas, curve.values, label=f"boot(m={m},n={n},mu*={mu_star:.4g})")


# Functionals

def _abs_third_moment(mean: np.ndarray, sd: np.ndarray) -> np.ndarray:
    """E|X|^3 for X ~ N(mean, sd^2)"""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    safe = np.where(sd > 0, sd, 1.0)
    r = mean / safe
    moment = safe ** 3 * (2.0 * stats.norm.pdf(r) * (r ** 2 + 2.0) + (r ** 3 + 3.0 * r) * (2.0 * special.ndtr(r) - 1.0))
    return np.where(sd > 0, moment, np.abs(mean) ** 3)


def _gaussian_family_functionals(components) -> Functionals:
    # log|f'| of a Gaussian mixture curve is distributed as sum_i w_i N(-mu_i^2/2, mu_i^2)
    w = np.array([c[0] for c in components])
    mu = np.array([c[1] for c in components])
    kl = float(np.sum(w * mu ** 2 / 2.0))
    kappa2 = float(np.sum(w * (mu ** 2 + mu ** 4 / 4.0)))
    kappa3 = float(np.sum(w * _abs_third_moment(-mu ** 2 / 2.0, mu)))
    kappa3_bar = float(np.sum(w * _abs_third_moment(-mu ** 2 / 2.0 + kl, mu)))
    return Functionals(kl=kl, kappa2=kappa2, kappa3=kappa3, kappa3_bar=kappa3_bar)


def tradeoff_functionals(curve: TradeoffCurve, exact: bool = True) -> Functionals:
    """
    kl = -int log|f'|, kappa2 = int log^2|f'|, kappa3 = int |log|f'||^3 on [0, 1].

    Gaussian curves and mixtures of them are evaluated in closed form unless
    exact=False. Otherwise the integrals run over the grid segments where the
    curve is positive and strictly decreasing, using the secant slope of each
    segment.
    """
    if curve.kind == 'identity':
        return Functionals(kl=0.0, kappa2=0.0, kappa3=0.0, kappa3_bar=0.0)
    if exact and curve.kind == 'gaussian':
        return _gaussian_family_functionals(((1.0, curve.mu),))
    if exact and curve.components is not None:
        return _gaussian_family_functionals(curve.components)

    alphas, values = curve.grid_points()
    widths = np.diff(alphas)
    slopes = np.diff(values) / widths
    usable = (values[:-1] > 0) & (slopes < 0)
    if not usable.any():
        raise DegenerateCurveError(f"{curve.label or curve.kind} has no strictly decreasing segment")
    log_slopes = np.log(-slopes[usable])
    w = widths[usable]
    kl = float(-np.sum(w * log_slopes))
    return Functionals(
        kl=kl,
        kappa2=float(np.sum(w * log_slopes ** 2)),
        kappa3=float(np.sum(w * np.abs(log_slopes) ** 3)),
        kappa3_bar=float(np.sum(w * np.abs(log_slopes + kl) ** 3)),
    )


# Composition limit

def composition_limit_terms(m: int, n: int, mu, B: int, mu_star: Optional[float] = None,
                            leading_order: bool = False) -> CompositionLimit:
    """
    K = B kl and s^2 = B kappa2 for B replicates, using the C_{1-p0} limit factors
    kl(C_{1-p0}(f_>)) ~ (1-p0)^2 kl(f_>) and likewise for kappa2.

    kl(f_>) and kappa2(f_>) come from the closed forms over inclusion counts.
    The mu*^4 part of kappa2 is reported as `remainder`; leading_order drops it
    from s, which makes 2K/s equal mu for the closed-form mu*_B.
    """
    B = _positive_int('B', B)
    probs = bootstrap_inclusion_probs(m, n)
    if mu_star is None:
        mu_star = mu_b_star(m, n, B, mu)
    if not mu_star > 0:
        raise ParameterError(f"mu_star must be positive, got {mu_star}")

    q = 1.0 - probs.p0
    counts = np.arange(1, probs.m + 1, dtype=float)
    w = probs.p[1:] / q
    second = float(np.sum(w * counts ** 2))
    fourth = float(np.sum(w * counts ** 4))

    kl_mixture = second * mu_star ** 2 / 2.0
    kappa2_leading = second * mu_star ** 2
    kappa2_remainder = fourth * mu_star ** 4 / 4.0
    kappa3_mixture = float(np.sum(w * _abs_third_moment(-(counts * mu_star) ** 2 / 2.0, counts * mu_star)))

    K = B * q ** 2 * kl_mixture
    s2 = B * q ** 2 * (kappa2_leading + (0.0 if leading_order else kappa2_remainder))
    s = math.sqrt(s2)
    return CompositionLimit(
        B=B,
        mu_star=float(mu_star),
        K=K,
        s=s,
        mu_eff=2.0 * K / s,
        remainder=B * q ** 2 * kappa2_remainder,
        max_kl=q ** 2 * kl_mixture,
        kappa3_sum=B * q ** 3 * kappa3_mixture,
    )


def asymptotic_privacy_check(m: int, n: int, mu, B_grid: Sequence[int], leading_order: bool = False,
                             mu_star_sequence: Optional[Sequence[float]] = None) -> List[float]:
    """
    Effective budget mu_eff(B) = 2K/s of B composed replicates for each B.

    K and s come from the full per-replicate functionals, so mu_eff(B) stays
    below mu and climbs towards it as B grows with the closed-form mu*_B. A
    custom mu_star_sequence checks other sequences against the same limit.
    """
    B_grid = [int(b) for b in B_grid]
    if not B_grid or any(b2 <= b1 for b1, b2 in zip(B_grid, B_grid[1:])):
        raise ParameterError(f"B_grid must be non-empty and increasing, got {B_grid}")
    if mu_star_sequence is not None and len(mu_star_sequence) != len(B_grid):
        raise ParameterError("mu_star_sequence must match B_grid in length")

    effective = []
    for idx, B in enumerate(B_grid):
        mu_star = mu_star_sequence[idx] if mu_star_sequence is not None else None
        terms = composition_limit_terms(m, n, mu, B, mu_star=mu_star, leading_order=leading_order)
        effective.append(terms.mu_eff)
        logger.debug(f"B={B}: mu*={terms.mu_star:.6g}, mu_eff={terms.mu_eff:.6g}, remainder={terms.remainder:.3g}")
    return effective


def curve_from_spec(text: str) -> TradeoffCurve:
    """Parse `gaussian:MU` or `bootstrap:M,N,MUSTAR` into a curve."""
    kind, _, args = str(text).partition(':')
    try:
        values = [float(part) for part in args.split(',')] if args else []
    except ValueError:
        raise ParameterError(f"curve arguments must be numbers, got {args!r}")
    if kind == 'gaussian' and len(values) == 1:
        return gaussian_tradeoff(values[0])
    if kind == 'bootstrap' and len(values) == 3:
        m, n, mu_star = values
        if m != int(m) or n != int(n):
            raise ParameterError(f"M and N must be integers, got {m:g}, {n:g}")
        return bootstrap_privacy_curve(int(m), int(n), mu_star)
    raise ParameterError(f"expected gaussian:MU or bootstrap:M,N,MUSTAR, got {text!r}")
