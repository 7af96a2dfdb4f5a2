"""Exact Ising computations on finite trees via leaf-to-root pruning.

Trees are stored in breadth-first order, so every parent index is smaller
than its children's and each generation is a contiguous index range. A
sweep then processes generations from the deepest one up, with no
recursion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import optimize

from bethe_ising import degree_laws
from bethe_ising._numerics import cavity_message, two_spin_correlation
from bethe_ising.degree_laws import DegreeLaw
from bethe_ising.errors import SizeExplosion
from bethe_ising.graphs import MultiGraph
from bethe_ising.rng import as_generator

DEFAULT_VERTEX_CAP = 10**7


class Boundary(str, Enum):
    FREE = "free"
    PLUS = "plus"


@dataclass(frozen=True, eq=False)
class RootedTree:
    """Rooted tree in BFS order with ``depth`` generations below the root.

    ``parent[0] == -1``. Vertices with ``generation == depth`` form the
    boundary that a plus boundary condition clamps to +1. Leaves in earlier
    generations are ordinary free vertices.
    """

    parent: np.ndarray
    generation: np.ndarray
    fields: np.ndarray
    depth: int

    def __post_init__(self):
        p = np.asarray(self.parent, dtype=np.int64)
        gen = np.asarray(self.generation, dtype=np.int64)
        f = np.broadcast_to(np.asarray(self.fields, dtype=float), p.shape).copy()
        if p.size == 0 or p[0] != -1 or np.any(p[1:] < 0):
            raise ValueError("vertex 0 must be the unique root")
        if np.any(p[1:] >= np.arange(1, p.size)):
            raise ValueError("vertices must be in BFS order (parent index < child index)")
        if gen[0] != 0 or np.any(gen[1:] != gen[p[1:]] + 1) or np.any(np.diff(gen) < 0):
            raise ValueError("generation array inconsistent with parents")
        if gen.max() > self.depth:
            raise ValueError("tree deeper than its declared depth")
        for name, arr in (("parent", p), ("generation", gen), ("fields", f)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return int(self.parent.size)

    @cached_property
    def generation_bounds(self) -> np.ndarray:
        """``bounds[g]:bounds[g+1]`` is the index range of generation ``g``."""
        counts = np.bincount(self.generation, minlength=self.depth + 1)
        return np.concatenate([[0], np.cumsum(counts)])

    @cached_property
    def n_children(self) -> np.ndarray:
        return np.bincount(self.parent[1:], minlength=self.n).astype(np.int64)

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.generation == self.depth)

    def children(self) -> dict:
        out: dict = {}
        for v in range(1, self.n):
            out.setdefault(int(self.parent[v]), []).append(v)
        return out

    def truncate(self, depth: int) -> "RootedTree":
        """First ``depth`` generations (a prefix of the vertex order)."""
        if depth > self.depth:
            raise ValueError("cannot truncate below the tree's depth")
        end = int(self.generation_bounds[min(depth, self.depth) + 1])
        return RootedTree(self.parent[:end], self.generation[:end], self.fields[:end], depth)

    def with_fields(self, fields) -> "RootedTree":
        return RootedTree(self.parent, self.generation, fields, self.depth)

    def to_graph(self) -> MultiGraph:
        v = np.arange(1, self.n)
        return MultiGraph(self.n, np.stack([self.parent[1:], v], axis=1))


def tree_from_offspring(counts_by_generation, field: float = 0.0, depth: int | None = None) -> RootedTree:
    """Build a tree from per-generation offspring counts.

    ``counts_by_generation[g]`` holds the offspring count of each vertex of
    generation ``g`` in order.
    """
    parent = [-1]
    generation = [0]
    current = np.array([0])
    for g, counts in enumerate(counts_by_generation):
        counts = np.asarray(counts, dtype=np.int64)
        if counts.size != current.size:
            raise ValueError(f"generation {g} has {current.size} vertices, got {counts.size} counts")
        kids = np.repeat(current, counts)
        start = len(parent)
        parent.extend(kids.tolist())
        generation.extend([g + 1] * kids.size)
        current = np.arange(start, start + kids.size)
    d = len(counts_by_generation) if depth is None else depth
    return RootedTree(np.array(parent), np.array(generation), field, d)


def sample_tree(root_law: DegreeLaw, offspring_law: DegreeLaw, depth: int, rng,
                field: float = 0.0, vertex_cap: int = DEFAULT_VERTEX_CAP) -> RootedTree:
    """Branching process with ``depth`` generations.

    The root draws its offspring from ``root_law``, every vertex in
    generations ``1..depth-1`` from ``offspring_law``; generation ``depth``
    consists of leaves.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    rng = as_generator(rng)
    parents = [np.array([-1], dtype=np.int64)]
    gens = [np.array([0], dtype=np.int64)]
    current = np.array([0], dtype=np.int64)
    total = 1
    for g in range(depth):
        law = root_law if g == 0 else offspring_law
        counts = degree_laws.sample(law, rng, current.size)
        kids = np.repeat(current, counts)
        if total + kids.size > vertex_cap:
            raise SizeExplosion(f"tree exceeded {vertex_cap} vertices at generation {g + 1}")
        parents.append(kids)
        gens.append(np.full(kids.size, g + 1, dtype=np.int64))
        current = np.arange(total, total + kids.size, dtype=np.int64)
        total += kids.size
        if kids.size == 0:
            break
    return RootedTree(np.concatenate(parents), np.concatenate(gens), field, depth)


def cavity_sweep(t: RootedTree, beta: float, bc: Boundary | str = Boundary.FREE) -> np.ndarray:
    """Cavity field of every vertex, computed from the leaves up.

    ``h_v = B_v + sum_{c child of v} atanh(tanh(beta) tanh(h_c))``. Under a
    plus boundary the generation-``depth`` vertices get ``h = +inf`` and so
    pass exactly ``beta`` to their parents. The root magnetization is
    ``tanh(h[0])``.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    bc = Boundary(bc)
    h = t.fields.copy()
    bounds = t.generation_bounds
    top = int(t.generation.max())
    if bc is Boundary.PLUS and top == t.depth:
        h[bounds[t.depth]: bounds[t.depth + 1]] = np.inf
    for g in range(top, 0, -1):
        lo, hi = bounds[g], bounds[g + 1]
        plo, phi = bounds[g - 1], bounds[g]
        msg = cavity_message(beta, h[lo:hi])
        h[plo:phi] += np.bincount(t.parent[lo:hi] - plo, weights=msg, minlength=phi - plo)
    return h


def root_magnetization(t: RootedTree, beta: float, bc: Boundary | str = Boundary.FREE) -> float:
    return float(np.tanh(cavity_sweep(t, beta, bc)[0]))


def xi(beta: float, b_min: float) -> float:
    """Field a child of field ``b_min`` sends through a bond of strength ``beta``."""
    return float(np.arctanh(np.tanh(beta) * np.tanh(b_min)))


def boundary_constant(beta_max: float, b_min: float) -> float:
    """``sup_{0 < beta <= beta_max} beta / xi(beta, b_min)``.

    As ``beta -> 0`` the ratio tends to ``1 / tanh(b_min)``; the supremum is
    taken over that limit, a grid, and a bounded scalar maximization.
    """
    if b_min <= 0:
        raise ValueError("b_min must be positive")
    if beta_max <= 0:
        return 1.0 / np.tanh(b_min)

    def ratio(b):
        return b / xi(b, b_min)

    grid = np.linspace(beta_max * 1e-6, beta_max, 2001)
    best = max(1.0 / np.tanh(b_min), max(ratio(b) for b in grid))
    res = optimize.minimize_scalar(lambda b: -ratio(b), bounds=(beta_max * 1e-6, beta_max),
                                   method="bounded")
    return float(max(best, -res.fun))


@dataclass(frozen=True)
class BoundaryGap:
    """Root magnetizations under both boundaries for trees truncated at each depth.

    ``m_plus[i, l-1]`` and ``m_free[i, l-1]`` belong to tree ``i`` cut at
    depth ``l``.
    """

    depths: np.ndarray
    m_plus: np.ndarray
    m_free: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.m_plus - self.m_free

    @property
    def mean_gap(self) -> np.ndarray:
        return self.gap.mean(axis=0)

    @property
    def max_gap(self) -> np.ndarray:
        return self.gap.max(axis=0)

    @property
    def max_scaled_gap(self) -> float:
        """``max over trees and depths of depth * gap``."""
        return float(np.max(self.depths * self.gap))


def boundary_gap(root_law: DegreeLaw, offspring_law: DegreeLaw, beta: float, field: float,
                 max_depth: int, trees: int, rng) -> BoundaryGap:
    """Plus-minus-free root magnetization gap for depths ``1..max_depth``."""
    if field <= 0:
        raise ValueError("field must be positive")
    rng = as_generator(rng)
    depths = np.arange(1, max_depth + 1)
    mp = np.empty((trees, max_depth))
    mf = np.empty((trees, max_depth))
    for i in range(trees):
        full = sample_tree(root_law, offspring_law, max_depth, rng, field=field)
        for j, d in enumerate(depths):
            sub = full.truncate(int(d))
            mp[i, j] = root_magnetization(sub, beta, Boundary.PLUS)
            mf[i, j] = root_magnetization(sub, beta, Boundary.FREE)
    return BoundaryGap(depths, mp, mf)


def joined_tree_correlation(offspring_law: DegreeLaw, beta: float, field: float, depth: int,
                            rng, bc: Boundary | str = Boundary.FREE, samples: int = 1) -> float:
    """Mean of ``<s_1 s_2>`` across ``samples`` draws of two joined trees.

    Each draw joins the roots of two independent ``depth``-generation trees
    whose vertices, roots included, all have ``offspring_law`` offspring.
    Each side is pruned to its root cavity field and the edge is then solved
    in closed form.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    rng = as_generator(rng)
    vals = np.empty(samples)
    for s in range(samples):
        h = []
        for _ in range(2):
            t = sample_tree(offspring_law, offspring_law, depth, rng, field=field)
            h.append(cavity_sweep(t, beta, bc)[0])
        vals[s] = two_spin_correlation(beta, h[0], h[1])
    return float(vals.mean())
