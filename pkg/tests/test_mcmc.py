import math

import numpy as np
import pytest

from bethe_ising import exact, mcmc
from bethe_ising import degree_laws as dl
from bethe_ising import graphs as gr
from bethe_ising.graphs import MultiGraph
from bethe_ising.rng import stream
from bethe_ising.suites import random_graph


def empty(n):
    return MultiGraph(n, np.empty((0, 2), dtype=np.int64))


def boltzmann(g, beta, B):
    n = g.n
    logw = np.empty(1 << n)
    e = g.edges[g.edges[:, 0] != g.edges[:, 1]]
    for a in range(1 << n):
        s = np.array([1 if (a >> i) & 1 else -1 for i in range(n)])
        logw[a] = beta * np.sum(s[e[:, 0]] * s[e[:, 1]]) + B * s.sum()
    w = np.exp(logw - logw.max())
    return w / w.sum()


def test_heat_bath_probability():
    assert mcmc.heat_bath_up_probability(0, 0.0, 0.0) == 0.5
    p = mcmc.heat_bath_up_probability(2, 0.5, 0.3)
    assert p == pytest.approx(1 / (1 + math.exp(-2 * (0.5 * 2 + 0.3))), abs=1e-15)
    assert mcmc.heat_bath_up_probability(-400, 10.0, 0.0) == 0.0


def test_detailed_balance_two_spins():
    g = MultiGraph(2, [[0, 1]])
    beta, B = 0.5, 0.3
    P = mcmc.transition_matrix(g, beta, B)
    pi = boltzmann(g, beta, B)
    for a in range(4):
        for b in range(4):
            assert pi[a] * P[a, b] == pytest.approx(pi[b] * P[b, a], abs=1e-16)
    np.testing.assert_allclose(P.sum(axis=1), 1, atol=1e-15)


def test_stationary_distribution_random_graphs():
    rng = stream(1)
    for _ in range(5):
        g = random_graph(rng, 5)
        beta, B = rng.uniform(0, 1), rng.uniform(-1, 1)
        P = mcmc.transition_matrix(g, beta, B)
        pi = boltzmann(g, beta, B)
        np.testing.assert_allclose(pi @ P, pi, atol=1e-14)


def test_beta_zero_magnetization():
    n, B = 1000, 0.4
    est = mcmc.estimate_edge_energy(empty(n), 0.0, B, 5000, 500, stream(2))
    assert abs(est.M - math.tanh(B)) <= 3 * est.M_stderr + 1e-4


def test_empty_graph_with_coupling_is_independent():
    est = mcmc.estimate_edge_energy(empty(200), 2.0, -0.3, 5000, 500, stream(3))
    assert abs(est.M - math.tanh(-0.3)) <= 3 * est.M_stderr + 1e-3
    assert est.e == 0


def test_single_edge_correlation():
    g = MultiGraph(2, [[0, 1]])
    beta, B = 0.5, 0.3
    ref = exact.solve_exact(exact.IsingInstance(g, beta, B)).edge_correlations[0]
    est = mcmc.estimate_edge_energy(g, beta, B, 200_000, 1000, stream(4))
    # e = <s0 s1> / 2 on two vertices
    assert abs(2 * est.e - ref) <= 3 * 2 * est.stderr


def test_beta_zero_edge_energy():
    g = gr.configuration_model([3] * 1000, stream(5))
    B = 0.5
    est = mcmc.estimate_edge_energy(g, 0.0, B, 3000, 500, stream(6))
    loops = g.n_loops
    expected = ((g.m - loops) * math.tanh(B) ** 2 + loops) / g.n
    assert abs(est.e - expected) <= 3 * est.stderr


def test_edge_energy_matches_exact_small_graphs():
    rng = stream(7)
    for _ in range(4):
        g = random_graph(rng, 10)
        beta, B = float(rng.uniform(0.1, 0.8)), float(rng.uniform(0.1, 0.6))
        ref = exact.solve_exact(exact.IsingInstance(g, beta, B)).edge_energy
        est = mcmc.estimate_edge_energy(g, beta, B, 60_000, 1000, rng)
        assert abs(est.e - ref) <= 3 * est.stderr
        assert abs(est.e) <= gr.edge_density(g)


def test_local_cache_matches_recomputation():
    g = gr.configuration_model_from_law(dl.poisson(3.0), 500, stream(8))
    state = mcmc.SpinState.initial(g, 0.6, 0.1, stream(9), value=None)
    mcmc.glauber_sweep(state, g, stream(10), n_sweeps=1000)
    assert np.array_equal(state.local, mcmc.local_sums(g, state.spins))
    e = g.edges[g.edges[:, 0] != g.edges[:, 1]]
    assert state.edge_sum == int(np.sum(state.spins[e[:, 0]] * state.spins[e[:, 1]]))
    assert state.spin_sum == int(state.spins.sum())


def test_seed_determinism():
    g = gr.configuration_model([3] * 300, stream(11))
    a = mcmc.estimate_edge_energy(g, 0.7, 0.2, 300, 100, stream(12))
    b = mcmc.estimate_edge_energy(g, 0.7, 0.2, 300, 100, stream(12))
    assert np.array_equal(a.trace.edge_energy, b.trace.edge_energy)
    assert np.array_equal(a.trace.magnetization, b.trace.magnetization)


def test_trace_properties(tmp_path):
    g = gr.configuration_model([3] * 300, stream(13))
    est = mcmc.estimate_edge_energy(g, 0.7, 0.2, 2000, None, stream(14))
    assert est.trace.burn_in >= 1000
    assert est.trace.ess <= est.trace.edge_energy.size
    est.trace.to_csv(tmp_path / "trace.csv")
    data = np.loadtxt(tmp_path / "trace.csv", delimiter=",", skiprows=1)
    assert data.shape == (est.trace.edge_energy.size, 3)


def test_burn_in_must_leave_measurements():
    with pytest.raises(ValueError):
        mcmc.estimate_edge_energy(MultiGraph(2, [[0, 1]]), 0.5, 0.1, 100, 100, stream(0))


def test_autocorrelation_time_of_ar1():
    rng = stream(15)
    phi, n = 0.8, 200_000
    x = np.empty(n)
    x[0] = 0
    noise = rng.normal(size=n)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + noise[i]
    tau = mcmc.integrated_autocorrelation_time(x)
    assert tau == pytest.approx((1 + phi) / (2 * (1 - phi)), rel=0.1)


def test_integration_at_beta_zero():
    g = random_graph(stream(16), 8)
    res = mcmc.pressure_by_integration(g, 0.0, 0.7, rng=stream(0))
    assert res.psi == pytest.approx(math.log(2 * math.cosh(0.7)), abs=1e-15)


def test_integration_matches_exact_pressure():
    rng = stream(17)
    g = random_graph(rng, 12, p_edge=0.3)
    beta, B = 0.6, 0.3
    ref = exact.solve_exact(exact.IsingInstance(g, beta, B)).pressure
    res = mcmc.pressure_by_integration(g, beta, B, mcmc.default_grid(beta, 0.05), 20_000, 1000, rng)
    assert abs(res.psi - ref) <= max(3 * res.stderr, 2 * res.quadrature_bias)


def test_integration_grid_validation():
    g = MultiGraph(2, [[0, 1]])
    with pytest.raises(ValueError):
        mcmc.pressure_by_integration(g, 0.5, 0.1, [0.1, 0.5])
    with pytest.raises(ValueError):
        mcmc.pressure_by_integration(g, 0.5, 0.1, [0.0, 0.3, 0.2, 0.5])


def test_edge_energy_increases_with_beta():
    g = gr.configuration_model([3] * 2000, stream(18))
    res = mcmc.pressure_by_integration(g, 0.8, 0.2, mcmc.default_grid(0.8, 0.1), 1500, 500, stream(19))
    for i in range(res.e.size - 1):
        assert res.e[i + 1] >= res.e[i] - 3 * math.hypot(res.e_stderr[i], res.e_stderr[i + 1])


def test_default_grid():
    g = mcmc.default_grid(0.8)
    assert g[0] == 0 and g[-1] == 0.8 and g.size == 17
    assert mcmc.default_grid(0.0).tolist() == [0.0]
