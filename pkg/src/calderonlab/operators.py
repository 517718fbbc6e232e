"""Concrete 1-D operators whose rearrangements are compared against S(f*).

* the non-centered Hardy-Littlewood maximal operator, computed exactly;
* sparse operators ``A_S f = sum_Q <f>_Q chi_Q`` over dyadic subintervals of [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._maximal import maximal_at, maximal_rearrangement
from .stepfn import GridFunction, rearrange

__all__ = [
    "SparseFamily",
    "hl_maximal",
    "sparse_generate",
    "validate_family",
    "sparse_apply",
    "family_to_json",
    "family_from_json",
    "Identity",
    "HardyLittlewood",
    "Sparse",
]


# ----------------------------------------------------------------------------
# maximal function


def hl_maximal(f, *, refine=4, pad=2.0):
    """Exact ``Mf`` sampled at the centers of a refined, padded grid.

    The output grid covers ``[left - pad*L, right + pad*L]`` (``L`` the length
    of ``f``'s interval) with cells ``refine`` times finer than ``f``'s.
    Values are exact at cell centers; outside the window ``Mf`` decays like
    ``1/distance`` and is truncated.
    """
    if not np.any(f.values):
        raise ValueError("maximal function of a function with empty support")
    refine = int(refine)
    if refine < 1 or pad < 0:
        raise ValueError("refine must be >= 1 and pad >= 0")
    width = f.width / refine
    extra = int(math.ceil(pad * f.n_cells * refine))
    left = f.left - extra * width
    n = f.n_cells * refine + 2 * extra
    centers = left + width * (np.arange(n) + 0.5)
    return GridFunction(left, width, maximal_at(f.edges, f.values, centers))


# ----------------------------------------------------------------------------
# sparse families


@dataclass(frozen=True)
class SparseFamily:
    """Dyadic cubes ``(level, index)`` of [0, 1) with their private sets.

    ``selected_sets[i]`` lists the depth-level cells making up ``E_Q`` for
    ``cubes[i]``.
    """

    depth: int
    eta: float
    cubes: tuple
    selected_sets: tuple

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if len(self.cubes) != len(self.selected_sets):
            raise ValueError("one selected set per cube")
        object.__setattr__(self, "cubes", tuple((int(k), int(j)) for k, j in self.cubes))
        object.__setattr__(self, "selected_sets",
                           tuple(tuple(int(c) for c in cells) for cells in self.selected_sets))

    def __len__(self):
        return len(self.cubes)


def sparse_generate(depth, eta, seed):
    """Random eta-sparse family of dyadic subintervals of [0, 1), deterministic in ``seed``.

    The root is always chosen. A chosen cube below the finest level reserves
    one random child as private and takes ``E_Q`` as the leftmost
    ``ceil(eta * |Q|)`` finest cells of it; the other child may hold further
    cubes. A finest-level cube owns itself. Unchosen intervals pass the
    choice down to both children, each chosen with probability 1/2.
    """
    depth = int(depth)
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if not 0 < eta <= 0.5:
        raise ValueError(f"infeasible eta={eta:g}: the construction needs 0 < eta <= 1/2")
    rng = np.random.default_rng(seed)
    cubes, sets = [], []

    def visit(level, index, chosen):
        span = 1 << (depth - level)
        first = index * span
        if chosen:
            cubes.append((level, index))
            if level == depth:
                sets.append((first,))
                return
            half = span // 2
            private = int(rng.integers(2))
            need = math.ceil(eta * span - 1e-12)
            start = first + private * half
            sets.append(tuple(range(start, start + need)))
            visit(level + 1, 2 * index + 1 - private, bool(rng.random() < 0.5))
        elif level < depth:
            for child in (2 * index, 2 * index + 1):
                visit(level + 1, child, bool(rng.random() < 0.5))

    if depth == 0:
        return SparseFamily(0, eta, ((0, 0),), ((0,),))
    visit(0, 0, True)
    return SparseFamily(depth, eta, tuple(cubes), tuple(sets))


def validate_family(family):
    """Independent check of the sparse invariants; returns a list of violations."""
    d = family.depth
    owner = np.full(1 << d, -1)
    problems = []
    if len(set(family.cubes)) != len(family.cubes):
        problems.append("repeated cube")
    for i, ((k, j), cells) in enumerate(zip(family.cubes, family.selected_sets)):
        if not (0 <= k <= d and 0 <= j < (1 << k)):
            problems.append(f"cube {(k, j)} is not a dyadic subinterval at depth {d}")
            continue
        lo, hi = j << (d - k), (j + 1) << (d - k)
        cells = np.asarray(cells, dtype=int)
        if cells.size and (cells.min() < lo or cells.max() >= hi):
            problems.append(f"E_Q of cube {(k, j)} leaves the cube")
            continue
        if np.unique(cells).size != cells.size:
            problems.append(f"E_Q of cube {(k, j)} repeats a cell")
        taken = owner[cells] >= 0
        if taken.any():
            problems.append(f"E_Q of cube {(k, j)} overlaps another E_Q")
        owner[cells] = i
        # |E_Q| >= eta |Q|  <=>  #cells >= eta 2^(d-k)
        if np.unique(cells).size < family.eta * (1 << (d - k)) - 1e-9:
            problems.append(f"E_Q of cube {(k, j)} is smaller than eta|Q|")
    return problems


def _aligned_cells(f, depth):
    n = f.n_cells
    if f.left != 0.0 or n == 0 or n & (n - 1) or n < (1 << depth):
        raise ValueError(f"grid is not aligned to dyadic cells of level {depth} in [0, 1)")
    if abs(f.width * n - 1.0) > 1e-12:
        raise ValueError("grid must cover exactly [0, 1)")
    return n


def sparse_apply(family, f):
    """``A_S f = sum_Q (1/|Q| int_Q f) chi_Q`` on ``f``'s grid, exact."""
    n = _aligned_cells(f, family.depth)
    cum = np.concatenate([[0.0], np.cumsum(f.values)])
    diff = np.zeros(n + 1)
    for k, j in family.cubes:
        span = n >> k
        a, b = j * span, (j + 1) * span
        avg = (cum[b] - cum[a]) / span
        diff[a] += avg
        diff[b] -= avg
    return GridFunction(f.left, f.width, np.cumsum(diff[:-1]))


def family_to_json(family):
    return {
        "depth": family.depth,
        "eta": family.eta,
        "cubes": [
            {"level": k, "index": j, "e_cells": list(cells)}
            for (k, j), cells in zip(family.cubes, family.selected_sets)
        ],
    }


def family_from_json(data):
    cubes = data["cubes"]
    return SparseFamily(
        int(data["depth"]),
        float(data["eta"]),
        tuple((c["level"], c["index"]) for c in cubes),
        tuple(tuple(c["e_cells"]) for c in cubes),
    )


# ----------------------------------------------------------------------------
# operator handles: apply(f) -> GridFunction, rearranged(f, t) -> (Tf)*(t)


class Identity:
    name = "identity"

    def apply(self, f):
        return f

    def rearranged(self, f, t):
        return rearrange(f)(np.asarray(t, dtype=float))


class HardyLittlewood:
    name = "hl_maximal"

    def apply(self, f):
        return hl_maximal(f)

    def rearranged(self, f, t):
        if not np.any(f.values):
            return np.zeros(np.shape(t))
        return maximal_rearrangement(f.edges, f.values, t)


class Sparse:
    name = "sparse"

    def __init__(self, family):
        self.family = family

    def apply(self, f):
        return sparse_apply(self.family, f)

    def rearranged(self, f, t):
        return rearrange(sparse_apply(self.family, f))(np.asarray(t, dtype=float))
