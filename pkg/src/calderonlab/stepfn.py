"""Piecewise-constant functions, their distribution functions and rearrangements.

Two carriers are used throughout the package:

* :class:`StepFunction` lives on ``(0, inf)``. It holds decreasing
  rearrangements ``f*`` as well as weights ``omega``, and may carry a constant
  tail beyond its last breakpoint.
* :class:`GridFunction` lives on the real line: uniform cells on a finite
  interval, zero outside. Concrete operators act on these.

Everything here is exact: measures are sums of cell lengths and integrals of
step functions are sums of rectangles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StepFunction",
    "GridFunction",
    "distribution_function",
    "rearrange",
    "double_star",
]


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Nonnegative step function on ``(0, inf)``.

    ``values[i]`` is taken on ``[breakpoints[i], breakpoints[i+1])`` and
    ``tail`` on ``[breakpoints[-1], inf)``.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        bp = _frozen(self.breakpoints)
        vals = _frozen(self.values)
        if bp.ndim != 1 or bp.size < 1 or bp[0] != 0.0:
            raise ValueError("breakpoints must be a 1-D sequence starting at 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if vals.shape != (bp.size - 1,):
            raise ValueError("need exactly one value per interval between breakpoints")
        if not (np.all(np.isfinite(vals)) and np.all(vals >= 0)):
            raise ValueError("values must be finite and nonnegative")
        tail = float(self.tail)
        if not (math.isfinite(tail) and tail >= 0):
            raise ValueError("tail must be finite and nonnegative")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "tail", tail)

    @classmethod
    def from_pieces(cls, lengths, values, tail=0.0):
        lengths = np.asarray(lengths, dtype=float)
        return cls(np.concatenate([[0.0], np.cumsum(lengths)]), values, tail)

    @classmethod
    def indicator(cls, length, height=1.0):
        """``height * chi_[0, length)``."""
        return cls([0.0, float(length)], [float(height)])

    @property
    def lengths(self):
        return np.diff(self.breakpoints)

    @property
    def end(self):
        return float(self.breakpoints[-1])

    def is_nonincreasing(self):
        chain = np.append(self.values, self.tail)
        return bool(np.all(np.diff(chain) <= 0))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        chain = np.append(self.values, self.tail)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        out = chain[np.clip(idx, 0, chain.size - 1)]
        return np.where(t < 0, 0.0, out)

    def integral(self, t):
        """``int_0^t f(s) ds`` for ``t >= 0`` (vectorized, exact)."""
        t = np.asarray(t, dtype=float)
        bp = self.breakpoints
        cum = np.concatenate([[0.0], np.cumsum(self.values * self.lengths)])
        chain = np.append(self.values, self.tail)
        idx = np.clip(np.searchsorted(bp, t, side="right") - 1, 0, chain.size - 1)
        return cum[idx] + chain[idx] * (t - bp[idx])

    def support_measure(self):
        if self.tail > 0:
            return math.inf
        return float(self.lengths[self.values > 0].sum())


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real-valued function on uniform cells ``[left + i*width, left + (i+1)*width)``."""

    left: float
    width: float
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        width = float(self.width)
        if not (width > 0 and math.isfinite(width)):
            raise ValueError("cell width must be positive and finite")
        vals = _frozen(self.values)
        if vals.ndim != 1 or not np.all(np.isfinite(vals)):
            raise ValueError("cell values must be a finite 1-D sequence")
        object.__setattr__(self, "left", float(self.left))
        object.__setattr__(self, "width", width)
        object.__setattr__(self, "values", vals)

    @property
    def n_cells(self):
        return self.values.size

    @property
    def right(self):
        return self.left + self.width * self.n_cells

    @property
    def edges(self):
        return self.left + self.width * np.arange(self.n_cells + 1)

    @property
    def centers(self):
        return self.left + self.width * (np.arange(self.n_cells) + 0.5)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.floor((x - self.left) / self.width).astype(np.int64)
        inside = (idx >= 0) & (idx < self.n_cells)
        out = np.zeros(x.shape)
        out[inside] = self.values[idx[inside]]
        return out

    def support_measure(self):
        return float(np.count_nonzero(self.values) * self.width)

    def __add__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        if (other.left, other.width, other.n_cells) != (self.left, self.width, self.n_cells):
            raise ValueError("grid functions live on different grids")
        return GridFunction(self.left, self.width, self.values + other.values)


def distribution_function(f, y):
    """Lebesgue measure of ``{|f| > y}``.

    Returns ``math.inf`` when a step function's tail exceeds ``y``.
    """
    y = float(y)
    if y < 0:
        raise ValueError("distribution function needs y >= 0")
    if isinstance(f, GridFunction):
        return float(np.count_nonzero(np.abs(f.values) > y) * f.width)
    if isinstance(f, StepFunction):
        if f.tail > y:
            return math.inf
        return float(f.lengths[f.values > y].sum())
    raise TypeError(f"cannot take the distribution function of {type(f).__name__}")


def rearrange(f):
    """Decreasing rearrangement ``f*`` as a :class:`StepFunction` with zero tail.

    Blocks with equal values are merged, so the result has strictly
    decreasing piece values.
    """
    if isinstance(f, GridFunction):
        heights = np.abs(f.values)
        lengths = np.full(heights.size, f.width)
    elif isinstance(f, StepFunction):
        if f.tail > 0:
            raise ValueError("non-rearrangeable tail: tail_value must be 0")
        heights = f.values
        lengths = f.lengths
    else:
        raise TypeError(f"cannot rearrange {type(f).__name__}")

    nz = heights > 0
    heights, lengths = heights[nz], lengths[nz]
    if heights.size == 0:
        return StepFunction([0.0, 1.0], [0.0])

    order = np.argsort(-heights, kind="stable")
    heights, lengths = heights[order], lengths[order]
    # group equal heights; lengths add up exactly within a block
    starts = np.concatenate([[True], heights[1:] != heights[:-1]])
    block = np.cumsum(starts) - 1
    merged = np.bincount(block, weights=lengths)
    return StepFunction.from_pieces(merged, heights[starts])


def double_star(fstar, t):
    """``f**(t) = (1/t) int_0^t f*(s) ds``, exact and vectorized in ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("f** is defined for t > 0")
    out = fstar.integral(t) / t
    return float(out) if out.ndim == 0 else out
