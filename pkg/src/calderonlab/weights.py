"""Weights on (0, inf): primitives, B-class constants, dilation envelopes, A1.

A weight is either a :class:`PowerWeight` ``omega(t) = t^(tau-1)`` (with
``W(t) = t^tau / tau`` in closed form) or a :class:`StepWeight` wrapping a
:class:`~calderonlab.stepfn.StepFunction`, whose constant tail is allowed.

Suprema for step weights are taken over a log grid (2000 points per decade,
three decades beyond the outermost breakpoints) joined with the breakpoints
and the closed-form limits at ``0`` and ``inf``. A divergent supremum is
reported as ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._maximal import closure_window_max
from ._quad import adaptive_quad
from .stepfn import GridFunction, StepFunction

__all__ = [
    "PowerWeight",
    "StepWeight",
    "DecayReport",
    "W_eval",
    "bR_constant",
    "bstar_constant",
    "wbar",
    "decay_bound_check",
    "a1_constant",
    "parse_weight",
]

PER_DECADE = 2000
MARGIN_DECADES = 3


@dataclass(frozen=True)
class PowerWeight:
    tau: float

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError("tau must be positive")
        object.__setattr__(self, "tau", float(self.tau))

    def density(self, t):
        return np.asarray(t, dtype=float) ** (self.tau - 1.0)

    def W(self, t):
        return np.asarray(t, dtype=float) ** self.tau / self.tau

    def __str__(self):
        return f"power:tau={self.tau:g}"


@dataclass(frozen=True, eq=False)
class StepWeight:
    body: StepFunction

    def density(self, t):
        return self.body(t)

    def W(self, t):
        return self.body.integral(t)

    @property
    def head(self):
        return float(self.body.values[0])

    @property
    def tail(self):
        return self.body.tail

    def __str__(self):
        bp = ",".join(f"{b:g}" for b in self.body.breakpoints)
        vals = ",".join(f"{v:g}" for v in self.body.values)
        return f"step:breaks={bp};values={vals};tail={self.body.tail:g}"


def parse_weight(text):
    """Parse ``power:tau=T`` or ``step:breaks=0,b1,..;values=v1,..;tail=V``."""
    kind, sep, rest = text.partition(":")
    if not sep:
        raise ValueError(f"weight spec {text!r} lacks a 'power:' or 'step:' prefix")
    fields = {}
    for part in rest.split(";"):
        if not part.strip():
            continue
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"malformed weight field {part!r}; expected key=value")
        fields[key.strip()] = val.strip()
    kind = kind.strip()
    if kind == "power":
        if set(fields) != {"tau"}:
            raise ValueError("power weight takes exactly tau=T")
        return PowerWeight(float(fields["tau"]))
    if kind == "step":
        unknown = set(fields) - {"breaks", "values", "tail"}
        if unknown or not {"breaks", "values"} <= set(fields):
            raise ValueError("step weight takes breaks=...;values=...[;tail=V]")
        breaks = [float(v) for v in fields["breaks"].split(",")]
        values = [float(v) for v in fields["values"].split(",")]
        return StepWeight(StepFunction(breaks, values, float(fields.get("tail", 0.0))))
    raise ValueError(f"unknown weight kind {kind!r}")


def W_eval(w, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise ValueError("W is evaluated at t > 0")
    out = w.W(t_arr)
    return float(out) if out.ndim == 0 else out


def _t_grid(w, extra=()):
    bp = w.body.breakpoints[1:]
    lo = math.log10(bp.min()) - MARGIN_DECADES
    hi = math.log10(bp.max()) + MARGIN_DECADES
    n = int(round((hi - lo) * PER_DECADE)) + 1
    grid = np.logspace(lo, hi, n)
    return np.unique(np.concatenate([grid, bp, np.asarray(extra, dtype=float)]))


# ----------------------------------------------------------------------------
# B_p^R


def _power_ratio_grid(tau, p, points):
    t = np.logspace(-3, 3, points)
    h = (t**tau / tau) ** (1.0 / p) / t
    return float(np.max(h / np.minimum.accumulate(h)))


def bR_constant(w, p, *, method="auto", points=6 * PER_DECADE + 1):
    """``sup_{0<r<=t} (r/t) (W(t)/W(r))^(1/p)``.

    The ratio factors as ``h(t)/h(r)`` with ``h(t) = W(t)^(1/p)/t``, so the
    double supremum is ``max_t h(t) / min_{r<=t} h(r)``. ``method`` selects
    the closed form (``"exact"``, power weights only) or the grid path.
    """
    p = float(p)
    if not p > 0:
        raise ValueError("p must be positive")
    if isinstance(w, PowerWeight):
        if w.tau > p:
            return math.inf  # (r/t)^(1 - tau/p) blows up as r/t -> 0
        if method == "grid":
            return _power_ratio_grid(w.tau, p, points)
        return 1.0

    if method == "exact":
        raise ValueError("closed form B_p^R only available for power weights")
    if w.head == 0.0:
        return math.inf  # W(r) = 0 for small r
    if p < 1:
        return math.inf  # h(r) ~ r^(1/p - 1) -> 0 as r -> 0
    W = w.W
    body = w.body
    # interior critical points of h on each linear piece of W, if any
    a = body.breakpoints
    Wa = W(a)
    chain = np.append(body.values, body.tail)
    crit = []
    if p > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            intercept = Wa - chain * a
            tc = intercept / (chain * (1.0 / p - 1.0))
        crit = tc[np.isfinite(tc) & (tc > 0)]
    t = _t_grid(w, crit)
    h = W(t) ** (1.0 / p) / t
    best = float(np.max(h / np.minimum.accumulate(h)))
    if p == 1.0:
        # h(t) -> tail as t -> inf, to be compared with every r
        best = max(best, body.tail / float(h.min()))
    return best


# ----------------------------------------------------------------------------
# B*_q


def _power_bstar_grid(tau, q, t_points):
    """Grid path for power weights: integrate each ratio numerically (z = log(t/s))."""
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    best = 0.0
    for t in t_points:
        if math.isinf(q):
            # int_0^t W(s)/s ds with W(s) = s^tau/tau
            def integrand(z):
                return (t * np.exp(-z)) ** tau / tau
        else:
            def integrand(z):
                # (t/s)^(1/q) s^tau with s = t e^-z
                return t**tau * np.exp(-z * (tau - inv_q))
        val = adaptive_quad(integrand, 0.0, math.inf, rtol=1e-12)
        best = max(best, val / (t**tau / tau))
    return best


def _step_bstar_ratio(w, q, t):
    body = w.body
    a = body.breakpoints
    chain = np.append(body.values, body.tail)
    idx = np.clip(np.searchsorted(a, t, side="right") - 1, 0, chain.size - 1)
    Wt = w.W(t)

    if math.isinf(q):
        Wa = w.W(a)
        coef = Wa - chain * a
        ends = a[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(a[:-1] > 0, np.log(ends / np.where(a[:-1] > 0, a[:-1], 1.0)), 0.0)
        full = coef[:-1] * logs + chain[:-1] * (ends - a[:-1])
        cum = np.concatenate([[0.0], np.cumsum(full)])
        with np.errstate(divide="ignore", invalid="ignore"):
            part_log = np.where(a[idx] > 0, np.log(t / np.where(a[idx] > 0, a[idx], 1.0)), 0.0)
        J = cum[idx] + coef[idx] * part_log + chain[idx] * (t - a[idx])
    else:
        e = 1.0 - 1.0 / q
        pw = a**e
        full = chain[:-1] * (pw[1:] - pw[:-1]) / e
        cum = np.concatenate([[0.0], np.cumsum(full)])
        J = t ** (1.0 / q) * (cum[idx] + chain[idx] * (t**e - pw[idx]) / e)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Wt > 0, J / Wt, 0.0)
    return ratio


def bstar_constant(w, q, *, method="auto", grid_points=7):
    """``[omega]_{B*_q}``; ``q = inf`` uses ``sup (1/W(t)) int_0^t W(s)/s ds``."""
    q = float(q)
    if not q > 0:
        raise ValueError("q must be positive")
    if isinstance(w, PowerWeight):
        if not math.isinf(q) and w.tau <= 1.0 / q:
            return math.inf
        if method == "grid":
            return _power_bstar_grid(w.tau, q, np.logspace(-3, 3, grid_points))
        if math.isinf(q):
            return 1.0 / w.tau
        return w.tau / (w.tau - 1.0 / q)

    if method == "exact":
        raise ValueError("closed form B*_q only available for power weights")
    if w.tail == 0.0:
        return math.inf  # t^(1/q) or log t growth against a bounded W
    if q <= 1:
        return math.inf  # ratio grows like t^(1/q - 1) (log t for q = 1) at infinity
    # common limit at infinity (positive tail) and at 0 (positive head)
    limit = 1.0 if math.isinf(q) else q / (q - 1.0)
    t = _t_grid(w)
    return max(float(np.max(_step_bstar_ratio(w, q, t))), limit)


# ----------------------------------------------------------------------------
# dilation envelope


def wbar(w, lam):
    """``sup_t W(lam t) / W(t)`` for ``0 < lam < 1``.

    For step weights both ``W(lam t)`` and ``W(t)`` are affine between
    consecutive points of ``{b_i} U {b_i/lam}``, where their ratio is
    monotone, so the supremum is a maximum over those points and the two
    limits (``lam`` at both ends when the weight is positive there, ``1`` at
    infinity for a vanishing tail).
    """
    lam = float(lam)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    if isinstance(w, PowerWeight):
        return lam**w.tau
    bp = w.body.breakpoints[1:]
    t = np.unique(np.concatenate([bp, bp / lam]))
    Wt = w.W(t)
    ok = Wt > 0
    best = float(np.max(w.W(lam * t[ok]) / Wt[ok])) if ok.any() else 0.0
    if w.head > 0:
        best = max(best, lam)
    best = max(best, lam if w.tail > 0 else 1.0)
    return best


@dataclass(frozen=True)
class DecayReport:
    holds: bool
    worst_margin: float
    q: float
    constant: float


def decay_bound_check(w, q, *, points=200, lam_min=1e-6):
    """Check the power decay of ``wbar`` implied by the ``B*`` constant.

    ``q = inf``: ``wbar(lam) <= e lam^(1/(e B))`` with ``B = [omega]_{B*_inf}``;
    ``1 < q < inf``: ``wbar(lam) <= 4 q B lam^(1/q + 1/(4 q B))`` with
    ``B = [omega]_{B*_q}``. ``worst_margin`` is the largest ratio
    ``wbar / bound`` over the lambda grid; ``holds`` means it is ``<= 1``.
    """
    q = float(q)
    if not q > 1:
        raise ValueError("decay bounds need q > 1")
    B = bstar_constant(w, q)
    if not math.isfinite(B):
        raise ValueError(f"weight {w} is not in B*_{q:g}")
    lams = np.geomspace(lam_min, 1.0 - 1e-3, points)
    env = np.array([wbar(w, lam) for lam in lams])
    if math.isinf(q):
        bound = math.e * lams ** (1.0 / (math.e * B))
    else:
        bound = 4.0 * q * B * lams ** (1.0 / q + 1.0 / (4.0 * q * B))
    ratios = env / bound
    worst = float(ratios.max())
    return DecayReport(holds=bool(worst <= 1.0 + 1e-12), worst_margin=worst, q=q, constant=B)


# ----------------------------------------------------------------------------
# A1


def a1_constant(u):
    """``max Mu/u`` over the cells of ``u``, windows clipped to its interval.

    For a cell the supremum of ``Mu`` over its interior is the largest
    average over breakpoint windows that meet the closed cell.
    """
    if not isinstance(u, GridFunction):
        raise TypeError("a1_constant expects a GridFunction")
    if u.n_cells == 0:
        raise ValueError("empty weight")
    if np.any(u.values <= 0):
        raise ValueError("A1 weights must be strictly positive on every cell")
    best = closure_window_max(u.edges, u.values)
    return float(np.max(best / u.values))
