import numpy as np
import pytest
from scipy import stats

from src.errors import InfeasibleBudgetError, ParameterError
from src.models.privacy import DPParameters, GaussianMechanismSpec, PrivacyBudget
from src.services.gdp_core import (
    compose_gdp,
    gaussian_mechanism,
    gaussian_tradeoff,
    gdp_to_dp_delta,
    group_privacy,
    solve_budget,
)

# (mu, n, delta = n^-power, tabulated epsilon)
TABLE_EPSILONS = [
    (0.5, 500, 1, 1.234), (0.5, 500, 2, 2.101),
    (0.5, 1000, 1, 1.352), (0.5, 1000, 2, 2.254),
    (0.5, 5000, 1, 1.600), (0.5, 5000, 2, 2.579),
    (1.0, 500, 1, 2.912), (1.0, 500, 2, 4.586),
    (1.0, 1000, 1, 3.139), (1.0, 1000, 2, 4.887),
    (1.0, 5000, 1, 3.616), (1.0, 5000, 2, 5.523),
]


@pytest.mark.parametrize('mu', [0.1, 0.5, 1.0, 3.0])
def test_gaussian_tradeoff_matches_normal_quantiles(mu):
    alphas = np.linspace(0.001, 0.999, 57)
    expected = stats.norm.cdf(stats.norm.ppf(1 - alphas) - mu)
    np.testing.assert_allclose(gaussian_tradeoff(mu)(alphas), expected, atol=1e-12)


def test_gaussian_tradeoff_endpoints_and_identity():
    curve = gaussian_tradeoff(0.5)
    assert curve(0.0) == pytest.approx(1.0)
    assert curve(1.0) == pytest.approx(0.0)
    assert curve(0.05) == pytest.approx(0.8739, abs=1e-3)
    assert gaussian_tradeoff(0.0)(0.3) == pytest.approx(0.7)
    curve.validate()


def test_gaussian_tradeoff_rejects_negative_mu():
    with pytest.raises(ParameterError):
        gaussian_tradeoff(-0.1)


@pytest.mark.parametrize('mu', [0.3, 1.0, 2.5])
def test_gaussian_tradeoff_is_symmetric(mu):
    curve = gaussian_tradeoff(mu)
    alphas = np.linspace(0.001, 0.999, 41)
    np.testing.assert_allclose(curve(curve(alphas)), alphas, atol=1e-9)


def test_compose_and_group_privacy():
    assert compose_gdp([0.3, 0.4]).mu == pytest.approx(0.5)
    assert compose_gdp([PrivacyBudget(0.5)]).mu == pytest.approx(0.5)
    assert compose_gdp([0.5, 0.5]).mu == pytest.approx(0.5 * np.sqrt(2))
    assert group_privacy(0.5, 3).mu == pytest.approx(1.5)
    with pytest.raises(ParameterError):
        compose_gdp([])
    with pytest.raises(ParameterError):
        group_privacy(0.5, 0)


def test_composition_is_associative():
    left = compose_gdp([compose_gdp([0.2, 0.7]), 1.1]).mu
    right = compose_gdp([0.2, compose_gdp([0.7, 1.1])]).mu
    assert left == pytest.approx(right, rel=1e-12)


def test_composition_ignores_order():
    budgets = [0.2, 1.3, 0.7, PrivacyBudget(0.4)]
    expected = compose_gdp(budgets).mu
    for order in ([3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]):
        assert compose_gdp([budgets[i] for i in order]).mu == pytest.approx(expected, rel=1e-15)


def test_delta_is_decreasing_in_epsilon_and_stable_for_large_epsilon():
    deltas = [gdp_to_dp_delta(0.5, eps) for eps in np.linspace(0, 5, 26)]
    assert all(b <= a for a, b in zip(deltas, deltas[1:]))
    assert gdp_to_dp_delta(0.5, 0.0) == pytest.approx(stats.norm.cdf(0.25) - stats.norm.cdf(-0.25))
    assert gdp_to_dp_delta(0.5, 400.0) == 0.0


def test_table_epsilon_gives_table_delta():
    assert gdp_to_dp_delta(0.5, 1.234) == pytest.approx(0.002, abs=5e-5)


@pytest.mark.parametrize('mu, n, power, expected', TABLE_EPSILONS)
def test_solve_budget_reproduces_table_epsilons(mu, n, power, expected):
    assert solve_budget('epsilon', delta=float(n) ** -power, mu=mu) == pytest.approx(expected, abs=0.002)


def test_solve_budget_epsilon_scale_halves_the_root():
    total = solve_budget('epsilon', delta=0.002, mu=0.5)
    assert solve_budget('epsilon', delta=0.002, mu=0.5, epsilon_scale=2.0) == pytest.approx(total / 2, abs=1e-8)


def test_solve_budget_for_mu_inverts_delta():
    delta = gdp_to_dp_delta(0.7, 1.5)
    assert solve_budget('mu', delta=delta, epsilon=1.5) == pytest.approx(0.7, abs=1e-7)


def test_solve_budget_reports_infeasible_bounds():
    with pytest.raises(InfeasibleBudgetError) as excinfo:
        solve_budget('epsilon', delta=0.3, mu=0.5)
    assert excinfo.value.bound == 'epsilon_lower'

    with pytest.raises(InfeasibleBudgetError) as excinfo:
        solve_budget('mu', delta=1e-12, epsilon=0.0)
    assert excinfo.value.bound == 'mu_lower'


def test_solve_budget_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        solve_budget('epsilon', delta=0.0, mu=0.5)
    with pytest.raises(ParameterError):
        solve_budget('epsilon', delta=0.01)
    with pytest.raises(ParameterError):
        solve_budget('sigma', delta=0.01, mu=0.5)


def test_gaussian_mechanism_noise_scale():
    spec = GaussianMechanismSpec(sensitivity=0.1, mu=PrivacyBudget(0.5))
    assert spec.noise_sd == pytest.approx(0.2)
    draws = gaussian_mechanism(np.zeros(200_000), spec, np.random.default_rng(3))
    assert draws.std() == pytest.approx(0.2, rel=0.01)
    assert abs(draws.mean()) < 0.002


def test_gaussian_mechanism_is_reproducible_and_exact_without_sensitivity():
    spec = GaussianMechanismSpec(sensitivity=0.1, mu=PrivacyBudget(0.5))
    value = np.array([0.3, -1.0, 2.0])
    first = gaussian_mechanism(value, spec, np.random.default_rng(11))
    np.testing.assert_array_equal(first, gaussian_mechanism(value, spec, np.random.default_rng(11)))
    assert not np.array_equal(first, gaussian_mechanism(value, spec, np.random.default_rng(12)))

    silent = GaussianMechanismSpec(sensitivity=0.0, mu=PrivacyBudget(0.5))
    np.testing.assert_array_equal(gaussian_mechanism(value, silent, np.random.default_rng(11)), value)


def test_budget_models_validate_and_round_trip():
    with pytest.raises(ParameterError):
        PrivacyBudget(0.0)
    with pytest.raises(ParameterError):
        DPParameters(epsilon=1.0, delta=1.5)
    params = DPParameters(epsilon=1.234, delta=0.002)
    assert DPParameters.from_dict(params.to_dict()) == params
