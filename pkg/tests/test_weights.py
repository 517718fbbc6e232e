import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from calderonlab.stepfn import GridFunction, StepFunction
from calderonlab.weights import (
    PowerWeight,
    StepWeight,
    W_eval,
    a1_constant,
    bR_constant,
    bstar_constant,
    decay_bound_check,
    parse_weight,
    wbar,
)

TAUS = [0.125, 0.25, 0.5, 1.0]


def step_weight(breaks, values, tail):
    return StepWeight(StepFunction(breaks, values, tail))


step_weights = st.integers(1, 5).flatmap(lambda n: st.builds(
    lambda lengths, values, tail: step_weight(np.concatenate([[0], np.cumsum(lengths)]), values, tail),
    st.lists(st.floats(0.05, 5), min_size=n, max_size=n),
    st.lists(st.floats(0.05, 5), min_size=n, max_size=n),
    st.floats(0.05, 5),
))


def test_w_eval_examples():
    assert W_eval(PowerWeight(0.5), 4.0) == pytest.approx(4.0, rel=1e-15)
    assert W_eval(step_weight([0, 1], [1], 0), 2.0) == 1.0
    assert W_eval(step_weight([0, 1], [2], 1), 3.0) == 4.0


def test_parse_weight():
    assert parse_weight("power:tau=0.25") == PowerWeight(0.25)
    w = parse_weight("step:breaks=0,1,2;values=3,1;tail=0.5")
    assert w.W(3.0) == pytest.approx(4.5)
    for bad in ["power", "power:tau=1;x=2", "step:values=1", "cone:tau=1", "power:tau=-1"]:
        with pytest.raises(ValueError):
            parse_weight(bad)


@pytest.mark.parametrize("tau", TAUS)
def test_br_power_exact_and_grid(tau):
    w = PowerWeight(tau)
    assert bR_constant(w, 1, method="exact") == 1.0
    assert bR_constant(w, 1, method="grid") == pytest.approx(1.0, abs=1e-4)


def test_br_examples():
    assert bR_constant(step_weight([0, 1], [1], 0), 1) == pytest.approx(1.0, rel=1e-12)
    assert bR_constant(PowerWeight(2.0), 1) == math.inf


@given(step_weights, st.sampled_from([1.0, 1.5, 3.0]))
def test_br_step_at_least_brute_force(w, p):
    t = np.geomspace(1e-4, 1e4, 1500)
    h = w.W(t) ** (1 / p) / t
    # ratio h(t)/h(r) over r <= t
    brute = np.max(np.tril(h[:, None] / h[None, :]))
    value = bR_constant(w, p)
    assert value >= brute * (1 - 1e-9)
    assert value <= brute * (1 + 1e-2)


@pytest.mark.parametrize("tau", TAUS)
def test_bstar_power(tau):
    w = PowerWeight(tau)
    assert bstar_constant(w, math.inf) == 1 / tau
    assert bstar_constant(w, math.inf, method="grid") == pytest.approx(1 / tau, rel=1e-2)
    if tau > 0.5:
        assert bstar_constant(w, 2, method="grid") == pytest.approx(tau / (tau - 0.5), rel=1e-2)
    else:
        assert bstar_constant(w, 2) == math.inf


def test_bstar_examples():
    assert bstar_constant(PowerWeight(1.0), 2) == 2.0
    assert bstar_constant(PowerWeight(1.0), math.inf) == 1.0


def quad_bstar(w, q, t):
    pieces = [b for b in w.body.breakpoints[1:] if b < t]
    if math.isinf(q):
        val, _ = quad(lambda s: float(w.W(s)) / s, 0, t, points=pieces or None, limit=200, epsrel=1e-12)
    else:
        val, _ = quad(lambda s: (t / s) ** (1 / q) * float(w.density(s)), 0, t,
                      points=pieces or None, limit=200, epsrel=1e-12)
    return val / float(w.W(t))


@given(step_weights, st.sampled_from([2.0, 4.0, math.inf]))
def test_bstar_step_against_quadrature(w, q):
    value = bstar_constant(w, q)
    bp = w.body.breakpoints[1:]
    for t in np.concatenate([bp, bp * 1.7, [bp[-1] * 50]]):
        assert quad_bstar(w, q, t) <= value * (1 + 1e-7)


def test_bstar_step_infinite_cases():
    assert bstar_constant(step_weight([0, 1], [1], 0), math.inf) == math.inf
    assert bstar_constant(step_weight([0, 1], [1], 1), 1.0) == math.inf


def test_wbar_examples():
    assert wbar(PowerWeight(0.5), 0.25) == 0.5
    assert wbar(step_weight([0, 1], [1], 1), 0.5) == pytest.approx(0.5, rel=1e-12)
    lams = np.linspace(0.05, 0.99, 40)
    w = step_weight([0, 1, 2], [3, 0.5], 1)
    vals = np.array([wbar(w, lam) for lam in lams])
    assert np.all(np.diff(vals) >= -1e-12)
    assert vals[-1] > 0.95


@given(step_weights, st.floats(0.01, 0.99))
def test_wbar_against_dense_grid(w, lam):
    t = np.geomspace(1e-4, 1e4, 20_000)
    brute = np.max(w.W(lam * t) / w.W(t))
    value = wbar(w, lam)
    assert value >= brute * (1 - 1e-12)
    assert value <= max(brute, lam) * (1 + 1e-3)


@given(step_weights, st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_wbar_submultiplicative(w, lam, mu):
    assert wbar(w, lam * mu) <= wbar(w, lam) * wbar(w, mu) * (1 + 1e-9)


@given(step_weights, st.sampled_from([2.0, 4.0]))
def test_primitive_ratio_bound(w, q):
    B = bstar_constant(w, q)
    t = np.geomspace(1e-3, 1e3, 60)
    r = t[:, None] * np.geomspace(1e-3, 1, 30)[None, :]
    lhs = w.W(r) / w.W(t)[:, None]
    assert np.all(lhs <= B * (r / t[:, None]) ** (1 / q) * (1 + 1e-9))


@given(step_weights, st.floats(0.001, 0.99))
def test_wbar_log_bound(w, lam):
    B = bstar_constant(w, math.inf)
    assert wbar(w, lam) <= B / math.log(1 / lam) * (1 + 1e-9)


@pytest.mark.parametrize("tau, q", [(1.0, math.inf), (0.25, math.inf), (1.0, 2.0)])
def test_decay_examples(tau, q):
    assert decay_bound_check(PowerWeight(tau), q).holds


@given(step_weights, st.sampled_from([2.0, 4.0, math.inf]))
def test_decay_holds_for_step_weights(w, q):
    assert decay_bound_check(w, q).holds


def test_decay_rejects_outside_class():
    with pytest.raises(ValueError):
        decay_bound_check(PowerWeight(0.25), 2.0)


def brute_a1(u, sub=256):
    """sup of Mu/u by enumerating windows on a refined endpoint grid."""
    n = u.n_cells
    edges = np.linspace(u.left, u.right, n * sub + 1)
    cum = np.concatenate([[0], np.cumsum(np.repeat(u.values, sub) * np.diff(edges))])
    i, j = np.triu_indices(edges.size, k=1)
    avg = (cum[j] - cum[i]) / (edges[j] - edges[i])
    # smallest u among the coarse cells a window meets
    lo_cell, hi_cell = i // sub, (j - 1) // sub
    mins = np.array([[u.values[a:b + 1].min() if a <= b else np.inf for b in range(n)] for a in range(n)])
    return float(np.max(avg / mins[lo_cell, hi_cell]))


def test_a1_examples():
    assert a1_constant(GridFunction(0, 0.5, [1, 1, 1])) == 1.0
    u = GridFunction(0, 1, [2, 1])
    assert a1_constant(u) == pytest.approx(2.0, rel=1e-15)


@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=4))
def test_a1_against_window_enumeration(vals):
    u = GridFunction(0, 1, vals)
    brute = brute_a1(u)
    value = a1_constant(u)
    assert value >= brute * (1 - 1e-12)
    assert value <= brute * 1.05


def test_a1_of_singular_power_is_reported():
    # cell averages of t^(-1/2) on [2^-10, 1); the constant is reported, not pinned
    left = 2.0**-10
    for m in (16, 64, 256):
        edges = np.linspace(left, 1, m + 1)
        avgs = 2 * np.diff(np.sqrt(edges)) / np.diff(edges)
        c = a1_constant(GridFunction(left, edges[1] - edges[0], avgs))
        assert 1 <= c < math.inf


def test_a1_rejects_nonpositive():
    with pytest.raises(ValueError):
        a1_constant(GridFunction(0, 1, [1, 0]))
