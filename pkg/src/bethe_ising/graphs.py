"""Random multigraphs and empirical checks of their local structure.

Graphs are stored as an edge array; self-loops and repeated edges are
kept exactly as the stub matching produced them.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from bethe_ising.degree_laws import DegreeLaw
from bethe_ising.errors import InvalidProbability
from bethe_ising.rng import as_generator


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Undirected multigraph on vertices ``0..n-1``.

    ``edges`` is an ``(m, 2)`` integer array. A self-loop ``(i, i)`` adds 2
    to the degree of ``i``.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n):
            raise ValueError("edge endpoint out of range")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n).astype(np.int64)

    @cached_property
    def n_loops(self) -> int:
        return int(np.count_nonzero(self.edges[:, 0] == self.edges[:, 1]))

    @cached_property
    def loops_at(self) -> np.ndarray:
        """Number of self-loops at each vertex."""
        e = self.edges[self.edges[:, 0] == self.edges[:, 1]]
        return np.bincount(e[:, 0], minlength=self.n).astype(np.int64)

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices)`` over non-loop edges, repeated per multiplicity."""
        e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, dst[order].astype(np.int64)

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.adjacency
        return indices[indptr[v]: indptr[v + 1]]


def configuration_model(degrees, rng) -> MultiGraph:
    """Uniform random matching of half-edges.

    If the total degree is odd the last vertex gets one extra half-edge.
    """
    d = np.array(degrees, dtype=np.int64)
    if d.ndim != 1:
        raise ValueError("degrees must be a 1-D sequence")
    if np.any(d < 0):
        raise ValueError("degrees must be non-negative")
    if d.size and d.sum() % 2 == 1:
        d[-1] += 1
    rng = as_generator(rng)
    stubs = np.repeat(np.arange(d.size, dtype=np.int64), d)
    stubs = rng.permutation(stubs)
    return MultiGraph(int(d.size), stubs.reshape(-1, 2))


def configuration_model_from_law(law: DegreeLaw, n: int, rng) -> MultiGraph:
    """Configuration model with i.i.d. degrees drawn from ``law``."""
    from bethe_ising.degree_laws import sample

    rng = as_generator(rng)
    return configuration_model(sample(law, rng, n), rng)


def _pair_from_index(idx: np.ndarray, n: int) -> np.ndarray:
    # row-major enumeration of pairs i < j
    idx = np.asarray(idx, dtype=np.float64)
    i = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * idx)) / 2).astype(np.int64)
    start = i * (2 * n - i - 1) // 2
    # guard against floating error at row boundaries
    over = start > idx
    i[over] -= 1
    start = i * (2 * n - i - 1) // 2
    under = idx >= start + (n - 1 - i)
    i[under] += 1
    start = i * (2 * n - i - 1) // 2
    j = (idx - start).astype(np.int64) + i + 1
    return np.stack([i, j], axis=1)


def erdos_renyi(n: int, mean_degree: float, rng) -> MultiGraph:
    """Each of the ``n(n-1)/2`` pairs is an edge with probability ``mean_degree/(n-1)``.

    The edge count is drawn from its binomial law and the edge set is then a
    uniform subset of that size, which is the same distribution.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if mean_degree < 0:
        raise ValueError("mean_degree must be non-negative")
    if n == 1:
        return MultiGraph(1, np.empty((0, 2), dtype=np.int64))
    p = mean_degree / (n - 1)
    if p > 1:
        raise InvalidProbability(f"edge probability {p} exceeds 1")
    rng = as_generator(rng)
    n_pairs = n * (n - 1) // 2
    m = int(rng.binomial(n_pairs, p))
    idx = np.sort(rng.choice(n_pairs, size=m, replace=False))
    return MultiGraph(n, _pair_from_index(idx, n))


def sparsity_profile(g: MultiGraph, ell: int) -> float:
    """``(1/n) sum_i D_i 1{D_i >= ell}``."""
    d = g.degrees
    return float(d[d >= ell].sum()) / g.n


def edge_density(g: MultiGraph) -> float:
    return g.m / g.n


# -- rooted tree canonical codes ---------------------------------------------

def canonical_code(children: dict, root) -> str:
    """AHU canonical string of the rooted tree given as ``{vertex: [children]}``.

    Two rooted trees get the same code iff they are isomorphic by a
    root-preserving bijection.
    """
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(children.get(v, ()))
    code = {}
    for v in reversed(order):
        code[v] = "(" + "".join(sorted(code[c] for c in children.get(v, ()))) + ")"
    return code[root]


def parse_code(code: str) -> list:
    """Parse a canonical code into nested lists of child subtrees."""
    stack = [[]]
    for ch in code:
        if ch == "(":
            stack.append([])
        elif ch == ")":
            node = stack.pop()
            stack[-1].append(node)
        else:
            raise ValueError(f"bad character {ch!r} in tree code")
    if len(stack) != 1 or len(stack[0]) != 1:
        raise ValueError("unbalanced tree code")
    return stack[0][0]


def _code_of(node: list) -> str:
    return "(" + "".join(sorted(_code_of(c) for c in node)) + ")"


def tree_code_from_generations(sizes) -> str:
    """Code of a tree where all vertices of a generation have equal offspring.

    ``sizes = [k0, k1, ...]`` means the root has ``k0`` children, each of
    which has ``k1`` children, and so on.
    """
    code = "()"
    for k in reversed(list(sizes)):
        code = "(" + code * k + ")"
    return code


def branching_shape_probability(code: str, root_law: DegreeLaw, offspring_law: DegreeLaw,
                                depth: int) -> float:
    """Probability that a ``depth``-generation branching tree has shape ``code``.

    The root has ``root_law`` offspring, all other vertices ``offspring_law``
    offspring, and vertices in generation ``depth`` are leaves.
    """
    tree = parse_code(code)

    def prob(node, law, gens_left):
        if gens_left == 0:
            return 1.0 if not node else 0.0
        k = len(node)
        if k > law.k_max:
            return 0.0
        p = float(law.pmf[k])
        if p == 0.0:
            return 0.0
        counts = Counter(_code_of(c) for c in node)
        by_code = {_code_of(c): c for c in node}
        # multinomial: children are i.i.d. subtrees
        p *= math.factorial(k)
        for c, mult in counts.items():
            p *= prob(by_code[c], offspring_law, gens_left - 1) ** mult / math.factorial(mult)
        return p

    return prob(tree, root_law, depth)


# -- neighbourhood balls ------------------------------------------------------

@dataclass(frozen=True)
class NeighborhoodBall:
    """Subgraph induced by the vertices within distance ``radius`` of ``center``."""

    center: int
    radius: int
    vertices: np.ndarray
    n_edges: int
    is_tree: bool
    generation_sizes: tuple
    code: str | None

    @property
    def offspring_counts(self) -> tuple:
        return self.generation_sizes[1:]


def sample_ball(g: MultiGraph, center: int, t: int) -> NeighborhoodBall:
    if not 0 <= center < g.n:
        raise ValueError("center out of range")
    if t < 0:
        raise ValueError("radius must be non-negative")
    indptr, indices = g.adjacency
    dist = {center: 0}
    parent = {center: None}
    order = [center]
    q = deque([center])
    while q:
        v = q.popleft()
        if dist[v] == t:
            continue
        for u in indices[indptr[v]: indptr[v + 1]]:
            u = int(u)
            if u not in dist:
                dist[u] = dist[v] + 1
                parent[u] = v
                order.append(u)
                q.append(u)
    verts = np.array(order, dtype=np.int64)
    inside = set(order)
    # induced edge count; each non-loop edge is seen from both ends
    twice = 0
    for v in order:
        for u in indices[indptr[v]: indptr[v + 1]]:
            if int(u) in inside:
                twice += 1
    n_edges = twice // 2 + int(g.loops_at[verts].sum())
    is_tree = n_edges == len(order) - 1
    sizes = Counter(dist.values())
    gen_sizes = tuple(sizes.get(r, 0) for r in range(t + 1))
    # trim trailing empty generations beyond the ball's extent
    while len(gen_sizes) > 1 and gen_sizes[-1] == 0:
        gen_sizes = gen_sizes[:-1]
    code = None
    if is_tree:
        children = {}
        for v in order[1:]:
            children.setdefault(parent[v], []).append(v)
        code = canonical_code(children, center)
    return NeighborhoodBall(center, t, verts, n_edges, is_tree, gen_sizes, code)


@dataclass(frozen=True)
class LocalLawEstimate:
    radius: int
    samples: int
    shape_counts: dict
    non_tree: int

    @property
    def non_tree_fraction(self) -> float:
        return self.non_tree / self.samples

    def frequency(self, code: str) -> float:
        return self.shape_counts.get(code, 0) / self.samples

    def dominant(self) -> tuple[str, float]:
        code, c = max(self.shape_counts.items(), key=lambda kv: kv[1])
        return code, c / self.samples

    def interval(self, code: str | None = None, z: float = 1.96) -> tuple[float, float]:
        """Wilson score interval for the frequency of ``code``.

        ``code=None`` gives the interval for the non-tree fraction.
        """
        k = self.non_tree if code is None else self.shape_counts.get(code, 0)
        n = self.samples
        p = k / n
        denom = 1 + z * z / n
        centre = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        return max(0.0, centre - half), min(1.0, centre + half)


def local_law_estimate(g: MultiGraph, t: int, samples: int, rng) -> LocalLawEstimate:
    """Empirical law of the radius-``t`` ball around a uniform vertex."""
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = as_generator(rng)
    centers = rng.integers(0, g.n, size=samples)
    counts: Counter = Counter()
    non_tree = 0
    for c in centers:
        ball = sample_ball(g, int(c), t)
        if ball.is_tree:
            counts[ball.code] += 1
        else:
            non_tree += 1
    return LocalLawEstimate(t, samples, dict(counts), non_tree)


# -- edge-list files ----------------------------------------------------------

def write_edge_list(g: MultiGraph, path) -> None:
    """Plain text: first line ``"n m"``, then one ``"u v"`` line per edge."""
    with open(path, "w") as fh:
        fh.write(f"{g.n} {g.m}\n")
        np.savetxt(fh, g.edges, fmt="%d")


def read_edge_list(path) -> MultiGraph:
    with open(path) as fh:
        n, m = (int(x) for x in fh.readline().split())
        edges = np.loadtxt(fh, dtype=np.int64, ndmin=2) if m else np.empty((0, 2), np.int64)
    edges = edges.reshape(-1, 2)
    if edges.shape[0] != m:
        raise ValueError(f"{Path(path).name}: header says {m} edges, found {edges.shape[0]}")
    return MultiGraph(n, edges)
