"""Admissible functions phi(x) = x^gamma * prod_k (log_(k) x)^beta_k and their lemmas.

``log_(1) x = 1 + log x`` and ``log_(k) x = 1 + log(log_(k-1) x)``. Every
function of this family is log-concave on ``[1, inf)``, satisfies
``phi(1) = 1`` and ``gamma/x <= phi'(x)/phi(x) <= beta/x`` with
``beta = gamma + sum(betas)``.

The helpers below evaluate the quantities appearing in the technical lemmas
(the comparability of the Calderon kernel integrals, the threshold past which
the tail integral behaves like its integrand, and the inf/sup bounds used to
optimise over power weights) so they can be checked numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from ._quad import LogKernel

__all__ = [
    "AdmissibleFunction",
    "SlopeBounds",
    "TildeFunction",
    "phi_eval",
    "slope_bounds",
    "scaling_bound_holds",
    "comparables_ratio",
    "comparables_constants",
    "lambda_threshold",
    "inf_bound",
    "inf_bound_constant",
    "sup_bound",
    "transform_tilde",
]

_GRID_POINTS = 10_000


def _iterated_logs(x, depth):
    logs = []
    cur = x
    for _ in range(depth):
        cur = 1.0 + np.log(cur)
        logs.append(cur)
    return logs


@dataclass(frozen=True)
class AdmissibleFunction:
    gamma: float
    betas: tuple = ()

    def __post_init__(self):
        gamma = float(self.gamma)
        betas = tuple(float(b) for b in self.betas)
        if not (gamma > 0 and math.isfinite(gamma)):
            raise ValueError("gamma must be positive")
        if any(not (b >= 0 and math.isfinite(b)) for b in betas):
            raise ValueError("betas must be nonnegative")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "betas", betas)

    @classmethod
    def power(cls, gamma):
        return cls(gamma)

    @classmethod
    def parse(cls, text):
        """Parse ``"gamma=G;betas=B1,B2,..."`` (the ``betas`` part is optional)."""
        fields = {}
        for part in text.split(";"):
            part = part.strip()
            if not part:
                continue
            key, sep, val = part.partition("=")
            if not sep:
                raise ValueError(f"malformed phi field {part!r}; expected key=value")
            fields[key.strip()] = val.strip()
        unknown = set(fields) - {"gamma", "betas"}
        if unknown:
            raise ValueError(f"unknown phi field(s): {', '.join(sorted(unknown))}")
        if "gamma" not in fields:
            raise ValueError("phi spec needs gamma=...")
        betas = fields.get("betas", "")
        return cls(float(fields["gamma"]),
                   tuple(float(b) for b in betas.split(",") if b.strip()))

    def __str__(self):
        text = f"gamma={self.gamma:g}"
        if self.betas:
            text += ";betas=" + ",".join(f"{b:g}" for b in self.betas)
        return text

    @property
    def beta(self):
        """Upper slope ``gamma + sum(betas)``."""
        return self.gamma + sum(self.betas)

    def log(self, x):
        x = np.asarray(x, dtype=float)
        out = self.gamma * np.log(x)
        for b, lk in zip(self.betas, _iterated_logs(x, len(self.betas))):
            if b:
                out = out + b * np.log(lk)
        return out

    def __call__(self, x):
        return np.exp(self.log(x))

    def log_derivative(self, x):
        """``phi'(x) / phi(x)``."""
        x = np.asarray(x, dtype=float)
        out = self.gamma / x
        chain = 1.0 / x  # derivative of log_(k) x, built up level by level
        for b, lk in zip(self.betas, _iterated_logs(x, len(self.betas))):
            out = out + b * chain / lk
            chain = chain / lk
        return out


def phi_eval(phi, x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 1):
        raise ValueError("admissible functions are defined on [1, inf)")
    out = phi(x_arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SlopeBounds:
    gamma_lo: float
    beta_hi: float


def slope_bounds(phi, *, x_max=1e6, points=_GRID_POINTS, slack=1e-6):
    """``(gamma, gamma + sum(betas))``, validated by finite differences.

    ``x phi'(x)/phi(x)`` is estimated by central differences of ``log phi`` in
    ``log x`` over a log grid of ``[1, x_max]``. A candidate violated by more
    than ``slack`` (relative) raises ``ValueError``.
    """
    bounds = SlopeBounds(phi.gamma, phi.beta)
    h = 1e-5
    lx = np.linspace(h, math.log(x_max), points)
    elasticity = (phi.log(np.exp(lx + h)) - phi.log(np.exp(lx - h))) / (2 * h)
    lo_ok = elasticity >= bounds.gamma_lo * (1 - slack)
    hi_ok = elasticity <= bounds.beta_hi * (1 + slack)
    if not (lo_ok.all() and hi_ok.all()):
        bad = np.exp(lx[~(lo_ok & hi_ok)][0])
        raise ValueError(f"slope bounds {bounds} violated near x={bad:.6g}")
    return bounds


def scaling_bound_holds(phi, c, x, *, rtol=1e-12):
    """Check ``phi(c x) <= max(1, c^beta) phi(x)`` (requires ``c x >= 1``)."""
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    lhs = phi.log(c * x)
    rhs = np.maximum(0.0, phi.beta * np.log(c)) + phi.log(x)
    return lhs <= rhs + rtol * np.maximum(1.0, np.abs(rhs))


_KERNELS = {}


def _kernel(phi, q):
    """``G(u) = int_1^{e^u}`` of the comparables integrand, cached per (phi, q)."""
    key = (phi, q)
    if key not in _KERNELS:
        if math.isinf(q):
            _KERNELS[key] = LogKernel(phi, a=0.0, m=1)
        else:
            _KERNELS[key] = LogKernel(phi, a=1.0 / q, m=0)
    return _KERNELS[key]


def comparables_ratio(phi, q, r):
    """Both sides of the comparability of the kernel integral.

    ``lhs = int_1^r phi(1 + log s) s^(1/q - 1) ds`` and
    ``rhs = phi(1 + log r) r^(1/q) - 1``; for ``q = inf`` the integrand is
    ``(1 + log s)^-1 phi(1 + log s) / s`` and ``rhs = phi(1 + log r) - 1``.
    """
    q = float(q)
    r = float(r)
    if r < 1:
        raise ValueError("r must be >= 1")
    if not q > 0:
        raise ValueError("q must be positive")
    u = math.log(r)
    lhs = float(_kernel(phi, q)(np.array([u]))[0])
    if math.isinf(q):
        rhs = float(phi(1.0 + u)) - 1.0
    else:
        rhs = float(phi(1.0 + u)) * r ** (1.0 / q) - 1.0
    return lhs, rhs


def comparables_constants(phi, q):
    """Two-sided constants ``c_lo <= lhs/rhs <= c_hi`` for :func:`comparables_ratio`.

    ``rhs`` is the integral of ``d/du [phi(1+u) e^(u/q)]``; comparing that
    derivative with the ``lhs`` integrand via the slope bounds gives
    ``[1/beta, 1/gamma]`` for ``q = inf`` and ``[1/(beta + 1/q), q]`` otherwise.
    """
    q = float(q)
    if math.isinf(q):
        return 1.0 / phi.beta, 1.0 / phi.gamma
    return 1.0 / (phi.beta + 1.0 / q), q


def lambda_threshold(phi, q2, *, lam_max=1e6, r_max=1e12, points_per_decade=100):
    """Smallest grid ``lambda > 1`` past which ``g_q'`` tracks the tail integrand.

    With ``t = 1`` and ``x = 1 + log r``, the ratio of ``g_q'(r)`` to the
    integrand ``phi(x) r^(1/q - 2)`` (resp. ``phi(x)/(x r^2)``) is
    ``1 - 1/q - phi'(x)/phi(x)`` (resp. ``1 - phi'(x)/phi(x) + 1/x``). It tends
    to ``c_q = 1 - 1/q`` as ``r -> inf``; we ask for it to stay within a factor
    2 of ``c_q`` for every grid ``r >= lambda`` up to ``r_max``.
    """
    q2 = float(q2)
    if not q2 > 1:
        raise ValueError("q2 must be > 1")
    decades_r = math.log10(r_max)
    r = np.logspace(0.0, decades_r, int(decades_r * points_per_decade) + 1)
    x = 1.0 + np.log(r)
    psi = phi.log_derivative(x)
    if math.isinf(q2):
        c_q = 1.0
        ratio = 1.0 - psi + 1.0 / x
    else:
        c_q = 1.0 - 1.0 / q2
        ratio = c_q - psi
    rel = ratio / c_q
    bad = (rel < 0.5) | (rel > 2.0)

    decades_l = math.log10(lam_max)
    candidates = np.logspace(0.0, decades_l, int(decades_l * points_per_decade) + 1)[1:]
    if not bad.any():
        return float(candidates[0])
    last_bad = r[np.nonzero(bad)[0][-1]]
    above = candidates[candidates > last_bad]
    if above.size == 0:
        raise ValueError(
            f"no lambda <= {lam_max:g} found for phi={phi}, q2={q2:g}; "
            "parametrization is not admissible")
    return float(above[0])


def _refine_min(objective, lo, hi, x0):
    """One bounded scalar refinement around a grid minimiser (log variable)."""
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return min(float(res.fun), float(objective(x0)))


def inf_bound(phi, x, mu):
    """``inf_{0 < y <= mu} phi(1/y) e^(y x)`` against its envelope.

    Returns ``(numeric, bound)`` with ``bound = e^(mu x)`` for ``x <= 0`` and
    ``phi((1 + x)/mu)`` for ``x > 0``.
    """
    x = float(x)
    mu = float(mu)
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")

    def log_obj(ly):
        y = np.exp(ly)
        return phi.log(1.0 / y) + y * x

    ly = np.linspace(math.log(mu) - 8 * math.log(10), math.log(mu), _GRID_POINTS)
    vals = log_obj(ly)
    k = int(np.argmin(vals))
    lo = ly[max(k - 1, 0)]
    hi = ly[min(k + 1, ly.size - 1)]
    best = _refine_min(log_obj, lo, hi, ly[k])
    numeric = math.exp(best)
    if x <= 0:
        bound = math.exp(mu * x)
    else:
        bound = float(phi((1.0 + x) / mu))
    return numeric, bound


def inf_bound_constant(phi, mu):
    """A constant ``K`` with ``numeric <= K * bound`` in :func:`inf_bound`.

    For ``x > 0`` the choice ``y = mu/(1+x)`` gives ``K = e``; for ``x <= 0``
    the infimum sits at ``y = mu`` and equals ``phi(1/mu) e^(mu x)``.
    """
    return max(math.e, float(phi(1.0 / float(mu))))


def sup_bound(phi, y):
    """``sup_{x >= 1} phi(x) e^(-x/y)`` against ``max(1, beta^beta e^-beta) phi(y)``."""
    y = float(y)
    if y < 1:
        raise ValueError("y must be >= 1")
    beta = phi.beta
    x_hi = 50.0 * beta * y

    def neg_log_obj(lx):
        xx = np.exp(lx)
        return -(phi.log(xx) - xx / y)

    lx = np.linspace(0.0, math.log(x_hi), _GRID_POINTS)
    vals = neg_log_obj(lx)
    k = int(np.argmin(vals))
    lo = lx[max(k - 1, 0)]
    hi = lx[min(k + 1, lx.size - 1)]
    best = _refine_min(neg_log_obj, lo, hi, lx[k])
    numeric = math.exp(-best)
    bound = max(1.0, beta**beta * math.exp(-beta)) * float(phi(y))
    return numeric, bound


class TildeFunction:
    """The modified function entering the ``L^{p0,1}(u^alpha)`` estimates.

    ``tilde(x) = phi(x^(p0/alpha))`` for ``alpha < 1`` and ``x^-1 phi(x)`` for
    ``alpha = 1``; ``overline`` is ``phi(x^(p0/alpha))`` resp. ``phi(x)``.
    """

    def __init__(self, phi, p0, alpha):
        p0 = float(p0)
        alpha = float(alpha)
        if p0 < 1:
            raise ValueError("p0 must be >= 1")
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        self.phi = phi
        self.p0 = p0
        self.alpha = alpha

    def overline(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha < 1:
            return self.phi(x ** (self.p0 / self.alpha))
        return self.phi(x)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.alpha < 1:
            return self.phi(x ** (self.p0 / self.alpha))
        return self.phi(x) / x

    def power_exponent(self):
        """Exponent ``m`` when ``tilde(x) = x^m``; ``None`` if phi has log factors."""
        if self.phi.betas and any(self.phi.betas):
            return None
        if self.alpha < 1:
            return self.phi.gamma * self.p0 / self.alpha
        return self.phi.gamma - 1.0

    def as_admissible(self):
        m = self.power_exponent()
        if m is None or m <= 0:
            return None
        return AdmissibleFunction(m)


def transform_tilde(phi, p0, alpha):
    return TildeFunction(phi, p0, alpha)
