import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import special

from coherent_portfolio import RiskSpec, ScenarioSpace, UnsupportedDual
from coherent_portfolio.errors import (
    DimensionMismatch,
    InvalidScenarioSpace,
    ThetaOutOfRange,
)
from coherent_portfolio.oracle import (
    avar_dual_lp,
    avar_gaussian_quadrature,
    avar_ru,
    var_gaussian_bisection,
)
from coherent_portfolio.risk_measures import (
    RiskKind,
    avar_density,
    avar_gaussian_coeff,
    avar_scenario,
    dual_density_bounds,
    evaluate,
    gaussian_coefficient,
    neg_expectation,
    norm_ppf,
    var_gaussian_coeff,
)

thetas = st.floats(min_value=0.01, max_value=0.99)


@st.composite
def outcomes(draw, min_size=1, max_size=10):
    K = draw(st.integers(min_size, max_size))
    Y = np.array(draw(st.lists(st.floats(-5, 5), min_size=K, max_size=K)))
    raw = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=K, max_size=K)))
    return Y, raw / raw.sum()


# ---- specs and spaces


def test_spec_parse_round_trip():
    for text in ("neg_expectation", "var:0.05", "avar:0.25"):
        assert str(RiskSpec.parse(text)) == text
    assert RiskSpec.parse(" AVaR:0.1 ") == RiskSpec.avar(0.1)


@pytest.mark.parametrize("theta", [0.0, 1.0, -0.2, 1.5])
def test_theta_outside_unit_interval_rejected(theta):
    with pytest.raises(ThetaOutOfRange):
        RiskSpec.avar(theta)
    with pytest.raises(ThetaOutOfRange):
        avar_gaussian_coeff(theta)


@pytest.mark.parametrize("text", ["avar", "cvar:0.1", "neg_expectation:0.2"])
def test_spec_parse_rejects_garbage(text):
    with pytest.raises(ValueError):
        RiskSpec.parse(text)


def test_var_is_not_scenario_capable():
    assert not RiskSpec.var(0.05).scenario_capable
    assert RiskSpec.avar(0.05).scenario_capable
    with pytest.raises(UnsupportedDual):
        evaluate(RiskSpec.var(0.05), [0.0, 1.0], [0.5, 0.5])


def test_scenario_space_validation():
    with pytest.raises(InvalidScenarioSpace):
        ScenarioSpace([[0.1, 0.2]], [0.9])
    with pytest.raises(InvalidScenarioSpace):
        ScenarioSpace([[0.1, 0.2], [0.3, 0.4]], [1.0, 0.0])
    with pytest.raises(InvalidScenarioSpace):
        ScenarioSpace([[0.1], [0.2]], [0.5, 0.5])
    with pytest.raises(DimensionMismatch):
        ScenarioSpace([[0.1, 0.2]], [0.5, 0.5])
    sp = ScenarioSpace.equiprobable([[0.1, 0.2], [0.3, 0.4]])
    with pytest.raises(ValueError):
        sp.returns[0, 0] = 1.0  # read-only


# ---- scenario evaluation


def test_neg_expectation_examples():
    assert neg_expectation([1, 3], [0.5, 0.5]) == -2
    assert neg_expectation([0, 0, 0], [1 / 3] * 3) == 0
    assert_allclose(neg_expectation([0.2, 0.0], [0.5, 0.5]), -0.1)
    with pytest.raises(DimensionMismatch):
        neg_expectation([1, 2, 3], [0.5, 0.5])


def test_avar_examples():
    assert avar_scenario([-1, 1], [0.5, 0.5], 0.5) == 1
    assert_allclose(avar_scenario([0.7] * 4, [0.1, 0.2, 0.3, 0.4], 0.3), -0.7)
    # worst half of three equal scenarios: all of -2 and half of -1
    Y, p = [-2, -1, 3], [1 / 3] * 3
    assert_allclose(avar_scenario(Y, p, 0.5), 5 / 3, atol=1e-14)
    assert_allclose(avar_ru(Y, p, 0.5), 5 / 3, atol=1e-12)


def test_avar_density_fractional_atom():
    V = avar_density([-2, -1, 3], [1 / 3] * 3, 0.5)
    assert_allclose(V, [2, 1, 0])


@given(outcomes(), thetas)
def test_avar_matches_tail_minimization(data, theta):
    Y, p = data
    assert_allclose(avar_scenario(Y, p, theta), avar_ru(Y, p, theta), atol=1e-8)


@given(outcomes(), thetas)
def test_avar_density_is_feasible_and_maximizing(data, theta):
    Y, p = data
    V = avar_density(Y, p, theta)
    assert np.all(V >= 0) and np.all(V <= 1 / theta + 1e-12)
    assert_allclose(p @ V, 1.0, atol=1e-12)
    lp_value, _ = avar_dual_lp(Y, p, theta)
    assert_allclose(-(p * V) @ Y, lp_value, atol=1e-8)


@given(outcomes(min_size=2), thetas, st.floats(-3, 3), st.floats(0, 4), st.integers(0, 2**32 - 1))
def test_avar_coherence(data, theta, c, lam, seed):
    Y, p = data
    Z = np.random.default_rng(seed).normal(size=Y.size)
    rho = lambda v: avar_scenario(v, p, theta)
    assert rho(Y - np.abs(Z)) >= rho(Y) - 1e-10  # monotone
    assert_allclose(rho(Y + c), rho(Y) - c, atol=1e-10)  # translative
    assert rho(Y + Z) <= rho(Y) + rho(Z) + 1e-10  # subadditive
    assert_allclose(rho(lam * Y), lam * rho(Y), atol=1e-10)  # homogeneous
    assert rho(np.zeros_like(Y)) == 0.0


# ---- Gaussian coefficients


def test_gaussian_coefficients_against_oracles():
    assert_allclose(avar_gaussian_coeff(0.05), 2.0627, atol=1e-4)
    assert_allclose(avar_gaussian_coeff(0.05), avar_gaussian_quadrature(0.05), atol=1e-8)
    assert_allclose(avar_gaussian_coeff(0.5), math.sqrt(2 / math.pi), atol=1e-12)
    assert_allclose(var_gaussian_coeff(0.05), 1.6449, atol=1e-4)
    assert_allclose(var_gaussian_coeff(0.05), var_gaussian_bisection(0.05), atol=1e-9)
    assert var_gaussian_coeff(0.5) == 0.0
    assert_allclose(var_gaussian_coeff(0.95), -1.6449, atol=1e-4)


@given(st.floats(1e-6, 1 - 1e-6))
def test_quantile_matches_reference(p):
    assert abs(norm_ppf(p) - special.ndtri(p)) <= 1e-9 * max(1.0, abs(special.ndtri(p)))


@given(st.floats(0.001, 0.999))
def test_avar_coefficient_against_quadrature(theta):
    assert_allclose(avar_gaussian_coeff(theta), avar_gaussian_quadrature(theta), atol=1e-8)


@given(st.floats(1e-4, 1 - 1e-4))
def test_avar_coefficient_dominates_var(theta):
    assert avar_gaussian_coeff(theta) > var_gaussian_coeff(theta)


def test_avar_coefficient_decreases_to_zero():
    thetas = np.linspace(0.5, 0.9999, 200)
    values = [avar_gaussian_coeff(t) for t in thetas]
    assert np.all(np.diff(values) < 0) and 0 < values[-1] < 1e-3


@given(st.floats(1e-4, 0.5))
def test_gaussian_coefficient_nonnegative_in_tail_range(theta):
    # for theta > 1/2 value-at-risk of Z is negative, so the range is restricted
    for spec in (RiskSpec.neg_expectation(), RiskSpec.var(theta), RiskSpec.avar(theta)):
        assert gaussian_coefficient(spec) >= 0.0


def test_gaussian_coefficient_dispatch():
    assert gaussian_coefficient(RiskSpec.neg_expectation()) == 0.0
    assert_allclose(gaussian_coefficient(RiskSpec.avar(0.05)), 2.0627, atol=1e-4)
    assert_allclose(gaussian_coefficient(RiskSpec.var(0.05)), 1.6449, atol=1e-4)


# ---- dual density sets


def test_dual_density_bounds():
    b = dual_density_bounds(RiskSpec.neg_expectation(), 3)
    assert b.fixed and not b.normalized
    assert_array_equal(b.lower, np.ones(3))
    b = dual_density_bounds(RiskSpec.avar(0.5), 2)
    assert b.normalized and not b.fixed
    assert_array_equal(b.upper, [2.0, 2.0])
    assert_array_equal(dual_density_bounds(RiskSpec.avar(0.25), 4).upper, [4.0] * 4)
    with pytest.raises(UnsupportedDual):
        dual_density_bounds(RiskSpec.var(0.1), 2)
    assert RiskKind("avar") is RiskKind.AVAR
