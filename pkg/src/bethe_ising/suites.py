"""Property suites run by ``bethe-ising verify``.

Each suite takes the function under test as a parameter so that a
deliberately broken double can be substituted to check that the suite
actually fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from bethe_ising import cavity, degree_laws, exact, mcmc, trees
from bethe_ising.graphs import MultiGraph
from bethe_ising.rng import stream


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: int = 0
    worst: float = 0.0
    messages: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.checks > 0 and self.failures == 0

    def check(self, ok: bool, violation: float = 0.0, message: str = "") -> None:
        self.checks += 1
        self.worst = max(self.worst, float(violation))
        if not ok:
            self.failures += 1
            if len(self.messages) < 5:
                self.messages.append(message)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.checks - self.failures}/{self.checks} checks (largest deviation {self.worst:.3g})"


def random_graph(rng, n: int, p_edge: float = 0.4, multi: bool = True) -> MultiGraph:
    """Small random multigraph, occasionally with a repeated edge or a loop."""
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p_edge
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    if multi and edges.shape[0] and rng.random() < 0.3:
        edges = np.vstack([edges, edges[rng.integers(edges.shape[0])]])
    if multi and rng.random() < 0.2:
        v = rng.integers(n)
        edges = np.vstack([edges, [v, v]])
    return MultiGraph(n, edges)


def random_instance(rng, n_max: int = 10) -> exact.IsingInstance:
    n = int(rng.integers(2, n_max + 1))
    g = random_graph(rng, n)
    return exact.IsingInstance(g, float(rng.uniform(0, 1.5)), rng.uniform(0, 1.0, n))


def gks_suite(instances: int = 100, seed: int = 0, tol: float = 1e-12, solver=exact.solve_exact,
              n_max: int = 10) -> SuiteResult:
    """Correlations are non-negative and grow with beta, any field, and added edges."""
    res = SuiteResult("GKS monotonicity")
    rng = stream(seed, "gks")
    for _ in range(instances):
        inst = random_instance(rng, n_max)
        base = solver(inst)
        corr0 = base.pair_correlations
        res.check(bool(np.all(base.vertex_magnetizations >= -tol)), -base.vertex_magnetizations.min(),
                  "negative magnetization")
        res.check(bool(np.all(corr0 >= -tol)), -corr0.min(), "negative correlation")
        bigger_beta = solver(inst.with_(beta=inst.beta + float(rng.uniform(0.01, 0.5))))
        k = int(rng.integers(inst.n))
        f = inst.fields.copy()
        f[k] += float(rng.uniform(0.01, 0.5))
        bigger_field = solver(inst.with_(fields=f))
        u, v = rng.choice(inst.n, 2, replace=False)
        g2 = MultiGraph(inst.n, np.vstack([inst.graph.edges, [[u, v]]]))
        more_edges = solver(inst.with_(graph=g2))
        for label, other in (("beta", bigger_beta), ("field", bigger_field), ("edge", more_edges)):
            drop = float(np.max(corr0 - other.pair_correlations))
            dm = float(np.max(base.vertex_magnetizations - other.vertex_magnetizations))
            res.check(drop <= tol and dm <= tol, max(drop, dm), f"correlation decreased when raising {label}")
    return res


def ghs_suite(instances: int = 100, seed: int = 0, tol: float = 1e-8, h: float = 1e-3,
              magnetization=exact.magnetization_with_fields, n_max: int = 10) -> SuiteResult:
    """Second differences of ``m_j`` in non-negative fields are non-positive."""
    res = SuiteResult("GHS concavity")
    rng = stream(seed, "ghs")
    for _ in range(instances):
        inst = random_instance(rng, n_max)
        inst = inst.with_(fields=inst.fields + 2 * h)
        j, k, l = (int(x) for x in rng.integers(inst.n, size=3))

        def m(dk, dl):
            f = inst.fields.copy()
            f[k] += dk
            f[l] += dl
            return magnetization(inst.with_(fields=f), j)

        if k == l:
            d2 = (m(h, 0) - 2 * m(0, 0) + m(-h, 0)) / h**2
        else:
            d2 = (m(h, h) - m(h, -h) - m(-h, h) + m(-h, -h)) / (4 * h**2)
        res.check(d2 <= tol, d2, f"positive second difference {d2:.3g} (j={j}, k={k}, l={l})")
    return res


def random_small_tree(rng, n_max: int = 15) -> trees.RootedTree:
    n = int(rng.integers(2, n_max + 1))
    parent = [-1] + [int(rng.integers(0, v)) for v in range(1, n)]
    # relabel into BFS order
    children = {}
    for v in range(1, n):
        children.setdefault(parent[v], []).append(v)
    order, gen = [0], {0: 0}
    i = 0
    while i < len(order):
        v = order[i]
        for c in children.get(v, []):
            gen[c] = gen[v] + 1
            order.append(c)
        i += 1
    new = {v: k for k, v in enumerate(order)}
    p = np.array([-1] + [new[parent[v]] for v in order[1:]])
    g = np.array([gen[v] for v in order])
    depth = int(g.max())
    return trees.RootedTree(p, g, rng.uniform(0.01, 2.0, n), depth)


def tree_bp_suite(count: int = 200, seed: int = 0, tol: float = 1e-12, sweep=trees.cavity_sweep) -> SuiteResult:
    """Root magnetization from the cavity sweep equals exact enumeration."""
    res = SuiteResult("tree BP vs enumeration")
    rng = stream(seed, "tree-bp")
    for _ in range(count):
        t = random_small_tree(rng)
        beta = float(rng.uniform(0, 2))
        for bc in (trees.Boundary.FREE, trees.Boundary.PLUS):
            fixed = tuple(t.boundary) if bc is trees.Boundary.PLUS else ()
            ref = exact.solve_exact(exact.IsingInstance(t.to_graph(), beta, t.fields, fixed))
            m = float(np.tanh(sweep(t, beta, bc)[0]))
            err = abs(m - ref.vertex_magnetizations[0])
            res.check(err <= tol, err, f"{bc.value}: |{m} - {ref.vertex_magnetizations[0]}|")
    return res


def boundary_gap_suite(trees_count: int = 100, max_depth: int = 12, beta: float = 0.8, B: float = 0.2,
                       seed: int = 0, gap_fn=trees.boundary_gap) -> SuiteResult:
    """``depth * (m_plus - m_free)`` stays below the explicit constant; both sequences are monotone."""
    res = SuiteResult("boundary gap")
    rho = degree_laws.regular(2)
    out = gap_fn(degree_laws.regular(3), rho, beta, B, max_depth, trees_count, stream(seed, "gap"))
    bound = trees.boundary_constant(beta, B)
    slack = 1e-12
    res.check(out.max_scaled_gap <= bound + slack, out.max_scaled_gap - bound, "scaled gap exceeds bound")
    res.check(bool(np.all(out.gap >= -slack)), float(-out.gap.min()), "negative gap")
    inc = float(np.max(np.diff(out.m_plus, axis=1)))
    dec = float(np.max(-np.diff(out.m_free, axis=1)))
    res.check(inc <= slack, inc, "plus magnetization increased with depth")
    res.check(dec <= slack, dec, "free magnetization decreased with depth")
    return res


def bracket_suite(seed: int = 0, pool_size: int = 20_000, beta: float = 0.8, B: float = 0.2,
                  tol: float = 1e-3, solver=cavity.solve) -> SuiteResult:
    """Free-start pool stays pointwise below the plus-start pool and the gap closes."""
    res = SuiteResult("bracket collapse")
    laws = {"regular": degree_laws.regular(3), "power_law": degree_laws.power_law(2.5, k_max=10**4)}
    for name, law in laws.items():
        rho = degree_laws.size_biased(law)
        r = solver(rho, beta, B, pool_size, 500, tol, stream(seed, "bracket", name), raise_on_failure=False)
        # the two pools share every draw, so only rounding can reorder them
        viol = float(np.max(r.population.samples - r.upper.samples))
        res.check(viol <= 1e-9, viol, f"{name}: free pool above plus pool")
        res.check(r.converged and r.bracket_gap <= tol, r.bracket_gap, f"{name}: gap {r.bracket_gap:.3g}")
    return res


def detailed_balance_suite(seed: int = 0, cases: int = 10) -> SuiteResult:
    """The heat-bath kernel is reversible with respect to the Boltzmann weights."""
    res = SuiteResult("detailed balance")
    rng = stream(seed, "db")
    for _ in range(cases):
        n = int(rng.integers(2, 6))
        g = random_graph(rng, n)
        beta, B = float(rng.uniform(0, 1.5)), float(rng.uniform(-1, 1))
        P = mcmc.transition_matrix(g, beta, B)
        logw = np.empty(1 << n)
        for a in range(1 << n):
            s = np.array([1 if (a >> i) & 1 else -1 for i in range(n)])
            e = g.edges[g.edges[:, 0] != g.edges[:, 1]]
            logw[a] = beta * np.sum(s[e[:, 0]] * s[e[:, 1]]) + B * s.sum()
        pi = np.exp(logw - logw.max())
        pi /= pi.sum()
        flow = pi[:, None] * P
        err = float(np.max(np.abs(flow - flow.T)))
        res.check(err <= 1e-15, err, "flow asymmetry")
    return res


def identity_suite(seed: int = 0, pool_size: int = 20_000, samples: int = 200_000) -> SuiteResult:
    """Fixed-point identity holds within three standard errors."""
    res = SuiteResult("fixed-point identity")
    # the regular pool is deterministic, so solve it to machine precision
    cases = {"regular": (degree_laws.regular(3), 1e-12),
             "power_law": (degree_laws.power_law(2.5, k_max=10**4), 1e-3)}
    for name, (law, tol) in cases.items():
        rho = degree_laws.size_biased(law)
        r = cavity.solve(rho, 0.8, 0.2, pool_size, 500, tol, stream(seed, "id-pool", name))
        out = cavity.fixed_point_identity_check(r.population, law, rho, samples, stream(seed, "id", name))
        z = abs(out["lhs"] - out["rhs"])
        res.check(z <= max(3 * out["stderr"], 1e-9), z, f"{name}: |lhs-rhs|={z:.3g}")
    return res


def anchor_suite(solver=exact.solve_exact) -> SuiteResult:
    """At beta = 0 every pressure equals log(2 cosh B)."""
    res = SuiteResult("beta=0 anchor")
    rng = stream(0, "anchor")
    for B in (0.1, 0.5, 1.0):
        g = random_graph(rng, 8)
        p = solver(exact.IsingInstance(g, 0.0, B)).pressure
        err = abs(p - math.log(2 * math.cosh(B)))
        res.check(err <= 1e-12, err, f"B={B}")
    return res


SUITES = {
    "anchor": lambda s, k: anchor_suite(),
    "gks": lambda s, k: gks_suite(max(1, int(100 * k)), s),
    "ghs": lambda s, k: ghs_suite(max(1, int(100 * k)), s),
    "tree_bp": lambda s, k: tree_bp_suite(max(1, int(200 * k)), s),
    "boundary_gap": lambda s, k: boundary_gap_suite(max(1, int(100 * k)), seed=s),
    "bracket": lambda s, k: bracket_suite(s),
    "detailed_balance": lambda s, k: detailed_balance_suite(s),
    "identity": lambda s, k: identity_suite(s),
}


def run_suites(names, seed: int = 0, scale: float = 1.0) -> list[SuiteResult]:
    if not names or "all" in names:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites: {unknown}; choose from {sorted(SUITES)}")
    return [SUITES[n](seed, scale) for n in names]
