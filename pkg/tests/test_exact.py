import itertools
import math

import numpy as np
import pytest

from bethe_ising import exact
from bethe_ising.errors import TooLarge
from bethe_ising.graphs import MultiGraph
from bethe_ising.rng import stream
from bethe_ising.suites import random_graph, random_instance


def naive_log_z(g, beta, fields):
    """Plain loop over configurations with Python floats."""
    fields = np.broadcast_to(fields, (g.n,))
    terms = []
    for s in itertools.product((-1, 1), repeat=g.n):
        h = sum(beta * s[u] * s[v] for u, v in g.edges.tolist())
        h += sum(b * x for b, x in zip(fields, s))
        terms.append(h)
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def edge(beta=0.0):
    return MultiGraph(2, [[0, 1]])


def test_single_spin():
    for B in (0.0, 0.3, -1.2):
        sol = exact.solve_exact(exact.IsingInstance(MultiGraph(1, np.empty((0, 2))), 0.7, B))
        assert sol.log_Z == pytest.approx(math.log(2 * math.cosh(B)), abs=1e-14)
        assert sol.vertex_magnetizations[0] == pytest.approx(math.tanh(B), abs=1e-14)


def test_single_edge_partition_function():
    beta, B = 0.6, 0.25
    sol = exact.solve_exact(exact.IsingInstance(edge(), beta, B))
    z = 2 * math.exp(beta) * math.cosh(2 * B) + 2 * math.exp(-beta)
    assert sol.log_Z == pytest.approx(math.log(z), abs=1e-14)


def test_beta_zero_pressure():
    rng = stream(0)
    for B in (0.1, 0.5, 1.0):
        g = random_graph(rng, 9)
        sol = exact.solve_exact(exact.IsingInstance(g, 0.0, B))
        assert abs(sol.pressure - math.log(2 * math.cosh(B))) <= 1e-12


def test_matches_naive_enumeration():
    rng = stream(1)
    for _ in range(20):
        inst = random_instance(rng, 7)
        inst = inst.with_(fields=rng.normal(0, 1, inst.n))
        assert exact.solve_exact(inst).log_Z == pytest.approx(
            naive_log_z(inst.graph, inst.beta, inst.fields), abs=1e-11)


def test_ring_transfer_matrix():
    # log Z of an n-ring = log(lam+^n + lam-^n)
    n, beta, B = 12, 0.9, 0.3
    v = np.arange(n)
    g = MultiGraph(n, np.stack([v, (v + 1) % n], axis=1))
    T = np.array([[math.exp(beta + B), math.exp(-beta)], [math.exp(-beta), math.exp(beta - B)]])
    lam = np.linalg.eigvalsh(T)
    assert exact.solve_exact(exact.IsingInstance(g, beta, B)).log_Z == pytest.approx(
        math.log(np.sum(lam**n)), rel=1e-13)


def test_self_loop_adds_beta_and_multi_edge_multiplies():
    beta, B = 0.4, 0.2
    base = exact.solve_exact(exact.IsingInstance(edge(), beta, B))
    loop = exact.solve_exact(exact.IsingInstance(MultiGraph(2, [[0, 1], [1, 1]]), beta, B))
    assert loop.log_Z - base.log_Z == pytest.approx(beta, abs=1e-14)
    np.testing.assert_allclose(loop.vertex_magnetizations, base.vertex_magnetizations, atol=1e-14)
    double = exact.solve_exact(exact.IsingInstance(MultiGraph(2, [[0, 1], [0, 1]]), beta, B))
    assert double.log_Z == pytest.approx(exact.solve_exact(exact.IsingInstance(edge(), 2 * beta, B)).log_Z)


def test_large_beta_no_overflow():
    rng = stream(2)
    g = random_graph(rng, 20, p_edge=0.5, multi=False)
    sol = exact.solve_exact(exact.IsingInstance(g, 50.0, 0.0))
    assert math.isfinite(sol.log_Z)
    assert sol.log_Z == pytest.approx(50.0 * g.m + math.log(2), rel=1e-12)


def test_too_large():
    with pytest.raises(TooLarge):
        exact.solve_exact(exact.IsingInstance(MultiGraph(25, np.empty((0, 2))), 0.1, 0.1))


def test_invariants_on_random_instances():
    rng = stream(3)
    for _ in range(30):
        inst = random_instance(rng, 8)
        sol = exact.solve_exact(inst)
        assert np.all(np.abs(sol.vertex_magnetizations) <= 1 + 1e-12)
        assert np.all(np.abs(sol.pair_correlations) <= 1 + 1e-12)
        assert np.all(sol.vertex_magnetizations >= -1e-12)
        assert np.all(sol.edge_correlations >= -1e-12)
        assert sol.susceptibility >= -1e-12


def test_susceptibility_examples():
    free_spin = exact.IsingInstance(MultiGraph(1, np.empty((0, 2))), 0.0, 0.0)
    assert exact.susceptibility_exact(free_spin) == pytest.approx(1.0, abs=1e-14)
    beta, B, d = 0.5, 0.1, 1e-4
    inst = exact.IsingInstance(edge(), beta, B)
    fd = (exact.solve_exact(inst.with_(fields=B + d)).magnetization
          - exact.solve_exact(inst.with_(fields=B - d)).magnetization) / (2 * d)
    assert abs(exact.susceptibility_exact(inst) - fd) <= 1e-6


def test_magnetization_with_fields_examples():
    iso = exact.IsingInstance(MultiGraph(1, np.empty((0, 2))), 0.0, 0.7)
    assert exact.magnetization_with_fields(iso, 0) == pytest.approx(math.tanh(0.7), abs=1e-15)
    beta, B = 0.6, 0.3
    clamped = exact.IsingInstance(edge(), beta, [B, 50.0])
    assert abs(exact.magnetization_with_fields(clamped, 0) - math.tanh(B + beta)) <= 1e-10
    rng = stream(4)
    sym = exact.IsingInstance(random_graph(rng, 6), 0.8, 0.0)
    np.testing.assert_allclose([exact.magnetization_with_fields(sym, j) for j in range(6)], 0, atol=1e-14)


def test_fixed_plus_is_conditioning():
    beta, B = 0.6, 0.3
    inst = exact.IsingInstance(edge(), beta, B, fixed_plus=(1,))
    assert exact.magnetization_with_fields(inst, 0) == pytest.approx(math.tanh(B + beta), abs=1e-15)
    assert exact.magnetization_with_fields(inst, 1) == 1.0


def test_pressure_derivatives():
    rng = stream(5)
    d = 1e-5
    for _ in range(10):
        inst = random_instance(rng, 8)
        B = float(rng.uniform(0.05, 1))
        inst = inst.with_(fields=B)
        sol = exact.solve_exact(inst)
        dbeta = (exact.solve_exact(inst.with_(beta=inst.beta + d)).pressure
                 - exact.solve_exact(inst.with_(beta=inst.beta + 0 if inst.beta < d else inst.beta - d)).pressure)
        dbeta /= d if inst.beta < d else 2 * d
        assert abs(dbeta - sol.edge_energy) <= 1e-6
        dB = (exact.solve_exact(inst.with_(fields=B + d)).pressure
              - exact.solve_exact(inst.with_(fields=B - d)).pressure) / (2 * d)
        assert abs(dB - sol.magnetization) <= 1e-6
        assert abs(dB) <= 1
