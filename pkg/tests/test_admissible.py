import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from calderonlab.admissible import (
    AdmissibleFunction,
    comparables_constants,
    comparables_ratio,
    inf_bound,
    inf_bound_constant,
    lambda_threshold,
    phi_eval,
    scaling_bound_holds,
    slope_bounds,
    sup_bound,
    transform_tilde,
)

phis = st.builds(
    AdmissibleFunction,
    st.floats(0.25, 6),
    st.lists(st.floats(0, 3), max_size=3).map(tuple),
)


def test_phi_eval_examples():
    assert phi_eval(AdmissibleFunction(1.0), math.e) == pytest.approx(math.e, rel=1e-15)
    assert phi_eval(AdmissibleFunction(1.0, (1.0,)), math.e) == pytest.approx(2 * math.e, rel=1e-15)
    assert phi_eval(AdmissibleFunction(2.5, (1.0, 2.0)), 1.0) == 1.0


def test_phi_eval_rejects_below_one():
    with pytest.raises(ValueError):
        phi_eval(AdmissibleFunction(1.0), 0.5)


def test_parse_round_trip():
    phi = AdmissibleFunction.parse("gamma=2;betas=1,0.5")
    assert phi == AdmissibleFunction(2.0, (1.0, 0.5))
    assert AdmissibleFunction.parse(str(phi)) == phi


@pytest.mark.parametrize("text", ["betas=1", "gamma=0", "gamma=1;beta=2", "gamma"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        AdmissibleFunction.parse(text)


@pytest.mark.parametrize("gamma, betas, expected", [
    (2.0, (), (2.0, 2.0)),
    (1.0, (1.0,), (1.0, 2.0)),
    (1.0, (1.0, 1.0), (1.0, 3.0)),
])
def test_slope_bounds_examples(gamma, betas, expected):
    b = slope_bounds(AdmissibleFunction(gamma, betas))
    assert (b.gamma_lo, b.beta_hi) == expected


@given(phis)
def test_log_derivative_matches_finite_differences(phi):
    x = np.geomspace(1.0, 1e5, 50)
    h = 1e-6
    fd = (phi.log(x * (1 + h)) - phi.log(x * (1 - h))) / (2 * h * x)
    np.testing.assert_allclose(phi.log_derivative(x), fd, rtol=1e-6)


@given(phis)
def test_power_sandwich_and_monotone(phi):
    x = np.geomspace(1.0, 1e6, 300)
    v = phi(x)
    assert np.all(np.diff(v) >= 0)
    assert np.all(x**phi.gamma <= v * (1 + 1e-12))
    assert np.all(v <= x**phi.beta * (1 + 1e-12))


@given(phis, st.floats(0, 12), st.floats(0, 12))
def test_log_concave_midpoint(phi, a, b):
    xa, xb = math.exp(a), math.exp(b)
    mid = 0.5 * (xa + xb)
    assert phi.log(mid) >= 0.5 * (phi.log(xa) + phi.log(xb)) - 1e-12


@given(phis, st.floats(0.1, 10), st.floats(1, 1e4))
def test_scaling_bound(phi, c, x):
    if c * x >= 1:
        assert scaling_bound_holds(phi, c, x)


def test_comparables_examples():
    x = AdmissibleFunction(1.0)
    lhs, rhs = comparables_ratio(x, math.inf, math.e)
    assert lhs == pytest.approx(1.0, rel=1e-12)
    assert rhs == pytest.approx(1.0, rel=1e-12)
    assert comparables_ratio(x, 3.0, 1.0) == (0.0, 0.0)
    lhs, rhs = comparables_ratio(x, 1.0, math.e)
    # int_1^e (1 + log s) ds = [s log s]_1^e = e
    assert lhs == pytest.approx(math.e, rel=1e-12)
    assert rhs == pytest.approx(2 * math.e - 1, rel=1e-12)


@given(phis, st.sampled_from([1.0, 2.0, 5.0, math.inf]), st.floats(1.01, 1e6))
def test_comparables_against_quad(phi, q, r):
    if math.isinf(q):
        def integrand(s):
            x = 1 + math.log(s)
            return float(phi(x)) / x / s
    else:
        def integrand(s):
            return float(phi(1 + math.log(s))) * s ** (1 / q - 1)
    # integrate in log s to keep quad happy over many decades
    expected, _ = quad(lambda u: integrand(math.exp(u)) * math.exp(u), 0, math.log(r),
                       epsabs=0, epsrel=1e-12, limit=200)
    lhs, rhs = comparables_ratio(phi, q, r)
    assert lhs == pytest.approx(expected, rel=1e-9)
    lo, hi = comparables_constants(phi, q)
    assert lo * (1 - 1e-9) <= lhs / rhs <= hi * (1 + 1e-9)


def test_lambda_threshold_examples():
    assert lambda_threshold(AdmissibleFunction(1.0), math.inf) < 1.05
    assert lambda_threshold(AdmissibleFunction(2.0), math.inf) <= math.e**2
    assert math.isfinite(lambda_threshold(AdmissibleFunction(1.0), 2.0))


def test_lambda_threshold_rejects_q2():
    with pytest.raises(ValueError):
        lambda_threshold(AdmissibleFunction(1.0), 1.0)


def test_inf_bound_examples():
    x1 = AdmissibleFunction(1.0)
    numeric, bound = inf_bound(x1, -1.0, 1.0)
    assert numeric == pytest.approx(math.exp(-1), rel=1e-9)
    assert bound == pytest.approx(math.exp(-1), rel=1e-15)
    numeric, _ = inf_bound(AdmissibleFunction(3.0, (1.0,)), 0.0, 1.0)
    assert numeric == pytest.approx(1.0, rel=1e-9)
    numeric, bound = inf_bound(x1, 3.0, 1.0)
    assert bound == 4.0
    assert numeric <= math.e * 4


@given(phis, st.floats(-30, 30), st.floats(0.01, 1))
def test_inf_bound_against_dense_grid(phi, x, mu):
    numeric, bound = inf_bound(phi, x, mu)
    y = np.geomspace(mu * 1e-9, mu, 200_001)
    brute = np.exp(phi.log(1 / y) + y * x).min()
    assert numeric <= brute * (1 + 1e-9)
    assert numeric >= brute * (1 - 1e-3)
    assert numeric <= inf_bound_constant(phi, mu) * bound * (1 + 1e-9)


def test_sup_bound_examples():
    numeric, bound = sup_bound(AdmissibleFunction(1.0), 2.0)
    assert numeric == pytest.approx(2 / math.e, rel=1e-9)
    assert bound == 2.0
    numeric, bound = sup_bound(AdmissibleFunction(2.0), 4.0)
    assert numeric == pytest.approx(64 * math.exp(-2), rel=1e-9)
    # max{1, 4 e^-2} * phi(4) = 16
    assert bound == pytest.approx(16.0, rel=1e-15)


@given(phis, st.floats(1, 200))
def test_sup_bound_holds(phi, y):
    numeric, bound = sup_bound(phi, y)
    assert numeric >= math.exp(-1 / y) * (1 - 1e-12)
    assert numeric <= bound * (1 + 1e-9)


def test_transform_tilde_examples():
    x = np.geomspace(1, 100, 7)
    np.testing.assert_allclose(transform_tilde(AdmissibleFunction(7.0), 2, 1)(x), x**6, rtol=1e-12)
    np.testing.assert_allclose(transform_tilde(AdmissibleFunction(1.0), 2, 0.5)(x), x**4, rtol=1e-12)
    np.testing.assert_allclose(transform_tilde(AdmissibleFunction(1.0), 1, 1)(x), 1.0, rtol=1e-12)
    assert transform_tilde(AdmissibleFunction(7.0), 2, 1).power_exponent() == 6


def test_transform_tilde_overline():
    x = np.geomspace(1, 100, 7)
    t = transform_tilde(AdmissibleFunction(1.0), 2, 0.5)
    np.testing.assert_allclose(t.overline(x), x**4, rtol=1e-12)
    t1 = transform_tilde(AdmissibleFunction(3.0), 2, 1)
    np.testing.assert_allclose(t1.overline(x), x**3, rtol=1e-12)


@pytest.mark.parametrize("p0, alpha", [(0.5, 1), (2, 0), (2, 1.5)])
def test_transform_tilde_rejects(p0, alpha):
    with pytest.raises(ValueError):
        transform_tilde(AdmissibleFunction(1.0), p0, alpha)
