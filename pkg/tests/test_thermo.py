import math

import numpy as np
import pytest

from bethe_ising import cavity, thermo
from bethe_ising import degree_laws as dl
from bethe_ising.errors import StepTooSmall
from bethe_ising.rng import stream

REG3 = dl.regular(3)
CHAIN = dl.regular(2)


def pool(law, beta, B, N=10**4, tol=1e-10, seed=0):
    return cavity.solve(dl.size_biased(law), beta, B, N, 2000, tol, stream(seed, beta, B)).population


def test_pressure_beta_zero():
    for B in (0.1, 0.5, 1.0):
        p = pool(dl.poisson(3.0), 0.0, B, N=1000)
        est = thermo.pressure(p, dl.poisson(3.0), mc_samples=10**4, rng=stream(1))
        assert abs(est.value - math.log(2 * math.cosh(B))) <= 1e-12


def test_pressure_chain_is_one_dimensional():
    # 1-D transfer matrix at zero field: largest eigenvalue 2 cosh(beta)
    for beta in (0.3, 1.0):
        p = pool(CHAIN, beta, 1e-6, N=1000)
        est = thermo.pressure(p, CHAIN, mc_samples=1000, rng=stream(0))
        assert abs(est.value - math.log(2 * math.cosh(beta))) <= 1e-4


def test_regular_pool_matches_closed_form():
    p = pool(REG3, 0.8, 0.2, N=1000, tol=1e-13)
    ref = thermo.bethe_lattice_point(3, 0.8, 0.2)
    for est, value in [(thermo.pressure(p, REG3, mc_samples=1000, rng=stream(0)), ref.phi),
                       (thermo.magnetization(p, REG3, mc_samples=1000, rng=stream(0)), ref.M),
                       (thermo.internal_energy(p, 3, mc_samples=1000, rng=stream(0)), ref.U)]:
        assert abs(est.value - value) <= max(3 * est.stderr, 1e-12)


def test_bethe_lattice_point_closed_form_at_beta_zero():
    pt = thermo.bethe_lattice_point(4, 0.0, 0.3)
    assert pt.phi == pytest.approx(math.log(2 * math.cosh(0.3)), abs=1e-15)
    assert pt.M == pytest.approx(math.tanh(0.3), abs=1e-15)
    with pytest.raises(ValueError):
        thermo.bethe_lattice_point(3, 0.8, 0.0)


def test_magnetization_limits():
    law = dl.poisson(3.0)
    p = pool(law, 0.0, 0.4, N=1000)
    assert thermo.magnetization(p, law, mc_samples=1000, rng=stream(0)).value == pytest.approx(math.tanh(0.4), abs=1e-15)
    p = pool(law, 0.5, 30.0, N=1000)
    assert abs(thermo.magnetization(p, law, mc_samples=1000, rng=stream(0)).value - 1) <= 1e-10


def test_internal_energy_limits():
    law = dl.poisson(3.0)
    p = pool(law, 0.0, 0.4, N=1000)
    U = thermo.internal_energy(p, law.mean, mc_samples=1000, rng=stream(0)).value
    assert U == pytest.approx(-0.5 * law.mean * math.tanh(0.4) ** 2, abs=1e-14)
    p = pool(law, 30.0, 0.4, N=1000)
    U = thermo.internal_energy(p, law.mean, mc_samples=1000, rng=stream(0)).value
    assert abs(U + 0.5 * law.mean) <= 1e-6


@pytest.mark.parametrize("law", [REG3, dl.poisson(3.0)])
def test_first_derivatives_of_pressure(law):
    beta, B, d = 0.8, 0.2, 1e-3
    p = pool(law, beta, B, N=10**5, tol=1e-10)
    S = 10**6
    M = thermo.magnetization(p, law, mc_samples=S, rng=stream(1))
    U = thermo.internal_energy(p, law.mean, mc_samples=S, rng=stream(2))
    dB = thermo.pressure_difference(p, law, (beta, B - d), (beta, B + d), S, stream(3))
    db = thermo.pressure_difference(p, law, (beta - d, B), (beta + d, B), S, stream(4))
    assert abs(M.value - dB.value / (2 * d)) <= max(3 * math.hypot(M.stderr, dB.stderr / (2 * d)), 1e-4)
    assert abs(U.value + db.value / (2 * d)) <= max(3 * math.hypot(U.stderr, db.stderr / (2 * d)), 1e-4)


def test_pressure_difference_is_paired():
    law = dl.poisson(3.0)
    p = pool(law, 0.5, 0.3, N=10**4, tol=1e-6)
    diff = thermo.pressure_difference(p, law, (0.5, 0.3), (0.5, 0.3), 10**4, stream(0))
    assert diff.value == 0 and diff.stderr == 0


def test_pressure_reflection():
    law = dl.poisson(2.0)
    p = pool(law, 0.7, 0.3, N=2000, tol=1e-6)
    a = thermo.pressure(p, law, B=0.3, mc_samples=10**4, rng=stream(0))
    b = thermo.pressure(p, law, B=-0.3, mc_samples=10**4, rng=stream(0))
    assert a.value == b.value


def test_pressure_monotone_on_grid():
    law = REG3
    betas = np.linspace(0.1, 1.2, 6)
    fields = np.linspace(0.05, 0.8, 6)
    phi = np.array([[thermo.bethe_lattice_point(3, b, B).phi for B in fields] for b in betas])
    assert np.all(np.diff(phi, axis=0) > 0)
    assert np.all(np.diff(phi, axis=1) > 0)
    law = dl.poisson(2.0)
    vals = [thermo.pressure(pool(law, b, 0.2, N=5000, tol=1e-6), law, mc_samples=10**5, rng=stream(1))
            for b in betas]
    for lo, hi in zip(vals, vals[1:]):
        assert hi.value >= lo.value - 3 * math.hypot(lo.stderr, hi.stderr)


def test_right_continuity_at_beta_zero():
    B = 0.3
    errs = [abs(thermo.bethe_lattice_point(3, eps, B).phi - math.log(2 * math.cosh(B)))
            for eps in (0.1, 0.01, 0.001)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_susceptibility_independent_spins():
    fields = np.array([0.2, 0.201, 0.202])
    tol = 1e-6
    _, chi, _ = thermo.susceptibility(fields, np.tanh(fields), tolerance=tol)
    assert abs(chi[0] - 1 / math.cosh(0.201) ** 2) <= 2 * tol


def test_susceptibility_rejects_noise_and_bad_grid():
    with pytest.raises(StepTooSmall):
        thermo.susceptibility([0.1, 0.2, 0.3], [0.1, 0.2, 0.3], [0.1, 0.1, 0.1], tolerance=0.01)
    with pytest.raises(ValueError):
        thermo.susceptibility([-0.1, 0.0, 0.1], [0, 0, 0])


def test_susceptibility_nonnegative_from_pools():
    law = dl.poisson(2.0)
    rho = dl.size_biased(law)
    fields = [0.19, 0.2, 0.21]
    M = [thermo.magnetization(cavity.solve(rho, 0.7, B, 10**4, 500, 1e-10, stream(7)).population,
                              law, mc_samples=10**5, rng=stream(8)) for B in fields]
    _, chi, se = thermo.susceptibility(fields, [m.value for m in M], [m.stderr for m in M])
    assert chi[0] >= -3 * se[0]


def test_critical_beta():
    assert thermo.critical_beta(2.0) == pytest.approx(0.5493061443340549, abs=1e-15)
    assert thermo.critical_beta(1.0) == math.inf
    bc = [thermo.critical_beta(dl.size_biased(dl.power_law(2.5, k_max=k)).mean) for k in (10**2, 10**4, 10**6)]
    assert bc[0] > bc[1] > bc[2]
    assert bc[2] < 0.01


def test_specific_heat_beta_zero_prefactor():
    _, C, _ = thermo.specific_heat([-0.01, 0.0, 0.01], [0.0, -0.5, -1.0])
    assert C[0] == 0.0


def test_specific_heat_chain():
    # 1-D chain at zero field: U = -tanh(beta), so C = beta^2 / cosh(beta)^2
    beta, d = 0.7, 1e-3
    Us = [thermo.internal_energy(pool(CHAIN, b, 1e-6, N=1000), 2, mc_samples=1000, rng=stream(0)).value
          for b in (beta - d, beta, beta + d)]
    _, C, _ = thermo.specific_heat([beta - d, beta, beta + d], Us)
    assert abs(C[0] - beta**2 / math.cosh(beta) ** 2) <= 1e-3


def test_specific_heat_smooth_for_regular_law():
    betas = np.linspace(0.1, 1.5, 57)
    U = [thermo.bethe_lattice_point(3, b, 0.2).U for b in betas]
    _, C, _ = thermo.specific_heat(betas, U)
    assert np.all(np.isfinite(C))
    jumps = np.abs(np.diff(C))
    for i, j in enumerate(jumps):
        local = np.median(jumps[max(0, i - 3): i + 4])
        assert j <= 10 * local


def test_thermo_point_invariants():
    law = dl.poisson(3.0)
    for beta, B in [(0.3, 0.1), (1.0, 0.5)]:
        p = pool(law, beta, B, N=5000, tol=1e-8)
        M = thermo.magnetization(p, law, mc_samples=10**4, rng=stream(0)).value
        U = thermo.internal_energy(p, law.mean, mc_samples=10**4, rng=stream(0)).value
        assert 0 <= M <= 1
        assert U <= 0


def test_extrapolate_to_zero_field():
    assert thermo.extrapolate_to_zero_field([1e-5, 1e-6, 1e-1], [2e-5 + 1, 2e-6 + 1, 7]) == pytest.approx(1.0)
