"""Generalized Calderon operators S = P_{q1} + Q_{q2,phi}, their kernel, A_k, Lorentz norms.

For ``f >= 0`` on ``(0, inf)``::

    P_{q1} f(t)       = t^(-1/q1) int_0^t f(s) s^(1/q1 - 1) ds
    Q_{q2,phi} f(t)   = t^(-1/q2) int_t^inf phi(1 + log(s/t)) f(s) s^(1/q2 - 1) ds
    Q_{inf,phi} f(t)  = int_t^inf phi(1 + log(s/t)) / (1 + log(s/t)) f(s) ds/s

With ``u = log(s/t)`` the conjugate part of a step function becomes a sum of
differences of the one-variable primitive ``G(u) = int_0^u phi(1+v) e^(v/q2) dv``
(``phi(1+v)/(1+v)`` for ``q2 = inf``), see :class:`calderonlab._quad.LogKernel`.
The Hardy part of a step function is closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from ._quad import LogKernel, adaptive_quad
from .admissible import AdmissibleFunction
from .stepfn import GridFunction, StepFunction, rearrange
from .weights import PowerWeight, StepWeight

__all__ = [
    "CalderonParams",
    "p_op",
    "q_op",
    "s_op",
    "kernel_primitive",
    "ak_norm",
    "lorentz_norm",
    "s_of_double_star",
    "double_star_of_s",
]


@dataclass(frozen=True)
class CalderonParams:
    q1: float
    q2: float
    phi: AdmissibleFunction

    def __post_init__(self):
        q1, q2 = float(self.q1), float(self.q2)
        if not (1 <= q1 < q2 and math.isfinite(q1)):
            raise ValueError(f"need 1 <= q1 < q2 <= inf, got q1={q1:g}, q2={q2:g}")
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "q2", q2)

    def __str__(self):
        return f"(q1={self.q1:g}, q2={self.q2:g}, phi=[{self.phi}])"

    def q_weight(self, x):
        """Multiplier of ``f(s)`` in the conjugate part, as a function of ``x = 1 + log(s/t)``."""
        x = np.asarray(x, dtype=float)
        if math.isinf(self.q2):
            return self.phi(x) / x
        return self.phi(x)


@lru_cache(maxsize=None)
def _kernel(phi, q2, shift=0.0):
    """``LogKernel`` for the conjugate part; ``shift`` adds ``e^(shift*u)``."""
    if math.isinf(q2):
        return LogKernel(phi, a=shift, m=1)
    return LogKernel(phi, a=1.0 / q2 + shift, m=0)


def _as_array(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("operators are evaluated at t > 0")
    return t


def _scalar_or_array(out, t):
    return float(out) if np.ndim(t) == 0 else out


def _power_integral(f, t, e):
    """``int_0^t f(s) s^(e-1) ds`` for a step function and ``e > 0``."""
    bp = f.breakpoints
    chain = np.append(f.values, f.tail)
    pw = bp**e
    cum = np.concatenate([[0.0], np.cumsum(f.values * (pw[1:] - pw[:-1]))]) / e
    idx = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, chain.size - 1)
    return cum[idx] + chain[idx] * (t**e - pw[idx]) / e


def p_op(q1, f, t):
    """``P_{q1} f(t)``, exact."""
    q1 = float(q1)
    if q1 < 1:
        raise ValueError("q1 must be >= 1")
    tt = _as_array(t)
    e = 1.0 / q1
    out = _power_integral(f, tt, e) / tt**e
    return _scalar_or_array(out, t)


def _jump_terms(f):
    """Breakpoints ``x_j`` and jumps ``c_{j-1} - c_j`` (zero before 0 and after the end)."""
    vals = np.concatenate([[0.0], f.values, [0.0]])
    return f.breakpoints, vals[:-1] - vals[1:]


def _telescoped(kernel, xs, jumps, t):
    """``sum_j jumps_j G(log(max(x_j, t)/t))``; only ``x_j > t`` contribute."""
    tt = np.atleast_1d(t)
    mask = xs[None, :] > tt[:, None]
    out = np.zeros(tt.shape)
    if mask.any():
        rows, cols = np.nonzero(mask)
        u = np.log(xs[cols] / tt[rows])
        np.add.at(out, rows, jumps[cols] * kernel(u))
    return out.reshape(np.shape(t))


def q_op(q2, phi, f, t):
    """``Q_{q2,phi} f(t)`` for a finitely supported step function."""
    q2 = float(q2)
    if not q2 > 1:
        raise ValueError("q2 must be > 1")
    if f.tail != 0:
        raise ValueError("Q needs a finitely supported function (tail_value = 0)")
    tt = _as_array(t)
    xs, jumps = _jump_terms(f)
    out = _telescoped(_kernel(phi, q2), xs, jumps, tt)
    return _scalar_or_array(out, t)


def s_op(params, f, t):
    """``S_{q1,q2,phi} f(t) = P_{q1} f(t) + Q_{q2,phi} f(t)``."""
    tt = _as_array(t)
    out = p_op(params.q1, f, tt) + q_op(params.q2, params.phi, f, tt)
    return _scalar_or_array(out, t)


def kernel_primitive(params, t, r):
    """``int_0^r k(t, s) ds`` for the kernel of ``S_{q1,q2,phi}``.

    ``q1 (r/t)^(1/q1)`` for ``r < t`` and ``q1 + G(log(r/t))`` for ``r >= t``.
    """
    t = float(t)
    r_arr = np.asarray(r, dtype=float)
    if t <= 0 or np.any(r_arr <= 0):
        raise ValueError("t and r must be positive")
    out = _kernel_of_ratio(params, r_arr / t)
    return _scalar_or_array(out, r)


def _kernel_of_ratio(params, x):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    low = x < 1
    out[low] = params.q1 * x[low] ** (1.0 / params.q1)
    out[~low] = params.q1 + _kernel(params.phi, params.q2)(np.log(x[~low]))
    return out


# ----------------------------------------------------------------------------
# A_k


def _ak_power(params, tau):
    """Scale invariance reduces A_k to ``sup_x K(x) x^(-tau)``, ``x = r/t``."""
    q1, q2 = params.q1, params.q2
    if tau > 1.0 / q1:
        return math.inf  # q1 x^(1/q1 - tau) as x -> 0
    decay = tau if math.isinf(q2) else tau - 1.0 / q2
    if decay <= 0:
        return math.inf  # kernel grows like x^(1/q2) phi(log x)
    # on x < 1 the supremum is the endpoint value q1 (exponent 1/q1 - tau >= 0)
    y_hi = max(60.0, 40.0 * params.phi.beta / decay)
    y = np.linspace(0.0, y_hi, 20_001)
    kern = _kernel(params.phi, q2)

    def log_obj(yy):
        return np.log(q1 + kern(np.atleast_1d(yy))) - tau * np.atleast_1d(yy)

    vals = log_obj(y)
    k = int(np.argmax(vals))
    lo, hi = y[max(k - 1, 0)], y[min(k + 1, y.size - 1)]
    best = float(vals[k])
    if hi > lo:
        res = minimize_scalar(lambda s: -float(log_obj(s)[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return max(q1, math.exp(best))


def ak_norm(params, w, *, per_decade=200):
    """``A_k = sup_t W(t) sup_r (int_0^r k(t,s) ds) / W(r)``."""
    if isinstance(w, PowerWeight):
        return _ak_power(params, w.tau)
    if not isinstance(w, StepWeight):
        raise TypeError("unsupported weight")
    if w.head == 0.0 or w.tail == 0.0:
        return math.inf  # W(r) -> 0 as r -> 0, or bounded W against unbounded kernel
    if params.q1 > 1:
        return math.inf  # (r/t)^(1/q1) / W(r) ~ r^(1/q1 - 1) as r -> 0
    bp = w.body.breakpoints[1:]
    lo = math.log10(bp.min()) - 3
    hi = math.log10(bp.max()) + 3
    grid = np.unique(np.concatenate([np.logspace(lo, hi, int((hi - lo) * per_decade) + 1), bp]))
    Wg = w.W(grid)
    best = 0.0
    for i, t in enumerate(grid):
        inner = np.max(_kernel_of_ratio(params, grid / t) / Wg)
        best = max(best, Wg[i] * inner)
    return float(best)


# ----------------------------------------------------------------------------
# Lorentz norms


def lorentz_norm(f, w, p, q):
    """``||f||_{Lambda^{p,q}(omega)}``, exact for step data.

    ``q < inf``: ``(int f*^q W^(q/p - 1) omega)^(1/q)``, integrated per piece
    of ``f*`` as ``(p/q) (W(b)^(q/p) - W(a)^(q/p))``.
    ``q = inf``: ``sup_t f*(t) W(t)^(1/p)``.
    """
    p, q = float(p), float(q)
    if not (p > 0 and q > 0):
        raise ValueError("p and q must be positive")
    fstar = f if isinstance(f, StepFunction) and f.is_nonincreasing() and f.tail == 0 else rearrange(f)
    bp = fstar.breakpoints
    Wb = np.concatenate([[0.0], w.W(bp[1:])])
    c = fstar.values
    if math.isinf(q):
        return float(np.max(c * Wb[1:] ** (1.0 / p)))
    mass = (p / q) * (Wb[1:] ** (q / p) - Wb[:-1] ** (q / p))
    top = float(c.max())
    if top == 0.0:
        return 0.0
    # scaled by the largest value so that c**q cannot underflow
    return top * float(np.sum((c / top) ** q * mass) ** (1.0 / q))


# ----------------------------------------------------------------------------
# the two sides of the Calderon identity


def s_of_double_star(params, fstar, t):
    """``S_{q1,q2,phi}(f**)(t)`` through the kernels.

    On a piece ``[a, b)`` of ``f*`` the running average is ``c + d/s`` with
    ``d = F(a) - c a``; past the support it is ``F_total / s``.
    """
    tt = _as_array(t)
    if fstar.tail != 0:
        raise ValueError("f* must be finitely supported")
    q1, q2, phi = params.q1, params.q2, params.phi
    bp = fstar.breakpoints
    c = np.append(fstar.values, 0.0)
    F = fstar.integral(bp)
    d = F - c * bp
    e = 1.0 / q1
    lo = bp
    hi = np.append(bp[1:], np.inf)
    T = np.atleast_1d(tt)[:, None]

    x_hi = np.minimum(hi[None, :], T)
    x_lo = np.minimum(lo[None, :], T)
    with np.errstate(divide="ignore", invalid="ignore"):
        part_c = c * (x_hi**e - x_lo**e) / e
        if q1 == 1.0:
            part_d = np.where(d != 0, d * np.log(x_hi / np.where(x_lo > 0, x_lo, 1.0)), 0.0)
        else:
            part_d = np.where(d != 0, d * (x_hi ** (e - 1) - x_lo ** (e - 1)) / (e - 1), 0.0)
    P = (part_c + part_d).sum(axis=1) / np.atleast_1d(tt) ** e

    g0 = _kernel(phi, q2)
    g1 = _kernel(phi, q2, -1.0)
    xs, jumps = _jump_terms(fstar)
    Q = np.atleast_1d(_telescoped(g0, xs, jumps, np.atleast_1d(tt)))
    # d-part: sum_i d_i/t [G1(u(b_i)) - G1(u(a_i))], tail piece reaching u = inf
    d_jumps = np.concatenate([[0.0], d[:-1]]) - d
    Q += _telescoped(g1, bp, d_jumps, np.atleast_1d(tt)) / np.atleast_1d(tt)
    Q += d[-1] * g1.total() / np.atleast_1d(tt)
    out = P + Q
    return _scalar_or_array(out.reshape(np.shape(tt)), t)


def double_star_of_s(params, fstar, t, *, rtol=1e-11):
    """``(S f*)**(t) = (1/t) int_0^t S f*(u) du`` by adaptive quadrature.

    Uses ``u = t e^(-z)``; the kinks of ``S f*`` sit at ``z = log(t / x_j)``.
    The range is cut at ``z = 700`` where ``e^(-z)`` is below double resolution
    against the at most polylogarithmic growth of ``S f*`` near 0.
    """
    tt = np.atleast_1d(_as_array(t))
    xs = fstar.breakpoints[1:]
    out = np.empty(tt.shape)
    for i, ti in enumerate(tt):
        kinks = [math.log(ti / x) for x in xs if x < ti]

        def integrand(z, ti=ti):
            return s_op(params, fstar, ti * np.exp(-z)) * np.exp(-z)

        out[i] = adaptive_quad(integrand, 0.0, 700.0, rtol=rtol, points=kinks)
    return _scalar_or_array(out.reshape(np.shape(t)), t)
