"""Vectorized Gauss-Legendre quadrature used by the Calderon machinery."""

from __future__ import annotations

import math

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(10)
_NODES8, _WEIGHTS8 = np.polynomial.legendre.leggauss(8)


class QuadratureError(RuntimeError):
    pass


def _panel_estimates(func, lo, hi):
    """10-point rule on each panel and on its two halves."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    quarter = 0.5 * half

    x_whole = mid[:, None] + half[:, None] * _NODES
    x_left = (lo + quarter)[:, None] + quarter[:, None] * _NODES
    x_right = (mid + quarter)[:, None] + quarter[:, None] * _NODES

    n = lo.size
    vals = func(np.concatenate([x_whole.ravel(), x_left.ravel(), x_right.ravel()]))
    vals = np.asarray(vals, dtype=float).reshape(3, n, _NODES.size)

    whole = half * (vals[0] @ _WEIGHTS)
    split = quarter * (vals[1] @ _WEIGHTS + vals[2] @ _WEIGHTS)
    return split, np.abs(split - whole)


def adaptive_quad(func, a, b, *, rtol=1e-10, atol=0.0, points=None, max_panels=2**20):
    """Integrate a vectorized ``func`` over ``[a, b]``.

    Panels are bisected until the summed local error estimate drops below
    ``max(atol, rtol * |integral|)``. ``b`` may be ``inf``; the half line is
    mapped onto ``[0, 1)`` by ``x = a + w / (1 - w)``. ``points`` are interior
    abscissae where the integrand has kinks.
    """
    a = float(a)
    b = float(b)
    if b < a:
        return -adaptive_quad(func, b, a, rtol=rtol, atol=atol, points=points,
                              max_panels=max_panels)
    if a == b:
        return 0.0

    cuts = sorted(p for p in (points or ()) if a < p < b)
    if math.isinf(b):
        def mapped(w):
            one_minus = 1.0 - w
            return func(a + w / one_minus) / (one_minus * one_minus)

        integrand = mapped
        edges = [0.0] + [(p - a) / (1.0 + p - a) for p in cuts] + [1.0]
    else:
        integrand = func
        edges = [a] + cuts + [b]

    lo = np.asarray(edges[:-1], dtype=float)
    hi = np.asarray(edges[1:], dtype=float)
    done_total = 0.0
    done_err = 0.0
    n_panels = lo.size

    while True:
        value, err = _panel_estimates(integrand, lo, hi)
        total = done_total + value.sum()
        tol = max(atol, rtol * abs(total))
        if done_err + err.sum() <= tol:
            return float(total)

        # Panels whose error is already negligible are retired.
        share = tol / max(n_panels, 1)
        keep = err > 0.25 * share
        done_total += value[~keep].sum()
        done_err += err[~keep].sum()
        lo, hi = lo[keep], hi[keep]
        if lo.size == 0:
            return float(done_total)

        n_panels += lo.size
        if n_panels > max_panels:
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after {max_panels} panels "
                f"(error {done_err + err.sum():.3e}, tolerance {tol:.3e})")
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])


class LogKernel:
    """Cumulative integral ``G(u) = int_0^u phi(1+v) (1+v)^(-m) e^(a v) dv``.

    This is the common primitive behind the conjugate-Hardy part of the
    Calderon operators: after the substitution ``u = log(s/t)`` every such
    integral reduces to differences of ``G``. Values are tabulated on cells
    of width ``1/16`` (each cell integrated adaptively to ~1e-14) and the
    remainder is a single 8-point Gauss-Legendre panel.
    """

    _H = 1.0 / 16.0

    def __init__(self, phi, a=0.0, m=0):
        self.phi = phi
        self.a = float(a)
        self.m = int(m)
        self._table = np.zeros(1)
        self._limit = None

    def integrand(self, v):
        v = np.asarray(v, dtype=float)
        x = 1.0 + v
        out = self.phi(x) * np.exp(self.a * v)
        if self.m:
            out = out / x**self.m
        return out

    def _extend(self, u_max):
        n_old = self._table.size - 1
        needed = int(math.ceil(u_max / self._H)) + 1
        grown = max(2 * n_old, 64)
        if self.a > 0.0:
            # do not tabulate past the point where e^(a v) overflows
            grown = min(grown, int(700.0 / self.a / self._H))
        n_new = max(needed, grown)
        lo = np.arange(n_old, n_new) * self._H
        hi = lo + self._H
        cells = np.empty(lo.size)
        for i, (l, h) in enumerate(zip(lo, hi)):
            cells[i] = adaptive_quad(self.integrand, l, h, rtol=1e-14)
        self._table = np.concatenate([self._table, self._table[-1] + np.cumsum(cells)])

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if u.size == 0:
            return np.zeros_like(u)
        if np.any(u < 0):
            raise ValueError("LogKernel is defined for u >= 0")
        finite = np.isfinite(u)
        out = np.empty_like(u)
        if not np.all(finite):
            out[~finite] = self.total()
        uf = u[finite]
        if uf.size:
            top = float(uf.max())
            if top >= (self._table.size - 1) * self._H:
                self._extend(top)
            k = np.floor(uf / self._H).astype(np.int64)
            base = k * self._H
            half = 0.5 * (uf - base)
            nodes = (base + half)[..., None] + half[..., None] * _NODES8
            rest = half * (self.integrand(nodes) @ _WEIGHTS8)
            out[finite] = self._table[k] + rest
        return out

    def total(self):
        """``G(inf)``; finite only when the integrand decays."""
        if self._limit is None:
            if self.a >= 0.0:
                self._limit = math.inf
            else:
                self._limit = adaptive_quad(self.integrand, 0.0, math.inf, rtol=1e-13)
        return self._limit
