"""Exact 1-D non-centered maximal function of step data.

All routines take cell ``edges`` (length n+1, increasing) and cell
``values`` (length n, taken in absolute value). Averages over a window are
monotone in each endpoint between breakpoints, so the supremum over windows
containing ``x`` is attained with endpoints in ``edges`` or at ``x`` itself.
"""

from __future__ import annotations

import numpy as np


def _cumulative(edges, values):
    return np.concatenate([[0.0], np.cumsum(np.abs(values) * np.diff(edges))])


def _pair_averages(edges, cum):
    """Matrix of window averages over ``[edges[i], edges[j]]``; ``-inf`` unless i < j."""
    n1 = edges.size
    i, j = np.triu_indices(n1, k=1)
    avg = np.full((n1, n1), -np.inf)
    avg[i, j] = (cum[j] - cum[i]) / (edges[j] - edges[i])
    return avg


def closure_window_max(edges, values):
    """Per cell k, the largest average over windows meeting the closed cell.

    This is ``sup`` of ``Mu`` over the open cell when windows are restricted
    to ``[edges[0], edges[-1]]``: windows ``[e_i, e_j]`` with ``i <= k+1``
    and ``j >= k``.
    """
    edges = np.asarray(edges, dtype=float)
    cum = _cumulative(edges, values)
    avg = _pair_averages(edges, cum)
    # best[i, j] = max over i' <= i and j' >= j of avg[i', j']
    best = np.maximum.accumulate(avg, axis=0)
    best = np.maximum.accumulate(best[:, ::-1], axis=1)[:, ::-1]
    k = np.arange(edges.size - 1)
    return best[k + 1, k]


def containing_window_max(edges, values):
    """Per cell k, the largest average over breakpoint windows containing the cell."""
    edges = np.asarray(edges, dtype=float)
    cum = _cumulative(edges, values)
    avg = _pair_averages(edges, cum)
    best = np.maximum.accumulate(avg, axis=0)
    best = np.maximum.accumulate(best[:, ::-1], axis=1)[:, ::-1]
    k = np.arange(edges.size - 1)
    return best[k, k + 1]


def maximal_at(edges, values, x):
    """Exact ``Mf(x)`` for points ``x`` that are not breakpoints."""
    edges = np.asarray(edges, dtype=float)
    x = np.asarray(x, dtype=float)
    vals = np.abs(np.asarray(values, dtype=float))
    cum = _cumulative(edges, vals)
    n = vals.size

    k = np.searchsorted(edges, x, side="right") - 1
    inside = (k >= 0) & (k < n)
    kk = np.clip(k, 0, n - 1)
    fx = np.where(inside, vals[kk], 0.0)
    base_edge = np.clip(k, 0, n)
    cum_x = np.where(k < 0, 0.0,
                     np.where(k >= n, cum[-1],
                              cum[base_edge] + fx * (x - edges[base_edge])))

    out = fx.copy()
    contain = containing_window_max(edges, vals)
    out = np.where(inside, np.maximum(out, contain[kk]), out)

    dx = x[:, None] - edges[None, :]
    dm = cum_x[:, None] - cum[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        one_sided = np.where(dx != 0, dm / dx, -np.inf)
    # dx > 0: window [edge, x]; dx < 0: window [x, edge]. Both give dm/dx.
    out = np.maximum(out, one_sided.max(axis=1))
    return out


def maximal_distribution(edges, values, y):
    """``|{Mf > y}|`` for levels ``y > 0`` (vectorized).

    ``x`` lies in the level set iff some window ``[a, b]`` around it has
    ``H(b) > H(a)`` with ``H(s) = F(s) - y s``; equivalently the running
    minimum of ``H`` from the left is below the running maximum from the
    right. Both are piecewise linear, so the measure is computed exactly.
    """
    edges = np.asarray(edges, dtype=float)
    vals = np.abs(np.asarray(values, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise ValueError("levels must be positive")
    cum = _cumulative(edges, vals)

    H = cum[None, :] - y[:, None] * edges[None, :]
    L = np.minimum.accumulate(H, axis=1)
    R = np.maximum.accumulate(H[:, ::-1], axis=1)[:, ::-1]

    lengths = np.diff(edges)[None, :]
    slope = vals[None, :] - y[:, None]
    gap = L[:, :-1] - R[:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        dec_zero = np.clip(gap / -slope, 0.0, lengths)
    flat_zero = np.where(gap >= 0, lengths, 0.0)
    zero = np.where(slope < 0, dec_zero, np.where(slope == 0, flat_zero, 0.0))
    measure = (lengths - zero).sum(axis=1)
    measure += (R[:, 0] - H[:, 0]) / y
    measure += (H[:, -1] - L[:, -1]) / y
    return measure


def maximal_rearrangement(edges, values, t, *, iterations=100):
    """``(Mf)*(t) = inf{y : |{Mf > y}| <= t}`` by vectorized bisection."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.abs(np.asarray(values, dtype=float))
    top = float(vals.max()) if vals.size else 0.0
    if top == 0.0:
        return np.zeros_like(t)
    lo = np.zeros_like(t)
    hi = np.full_like(t, top)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        too_big = maximal_distribution(edges, vals, mid) > t
        lo = np.where(too_big, mid, lo)
        hi = np.where(too_big, hi, mid)
        if np.all(hi - lo <= 1e-15 * top):
            break
    return hi
