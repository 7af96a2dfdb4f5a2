"""Limiting pressure and thermodynamic quantities from a cavity-field pool.

All estimators draw i.i.d. fields from the pool (and degrees from the root
law) and return the Monte Carlo mean with its standard error. Reusing a
seed reuses the draws, which is what the finite-difference checks rely on:
the pool is held fixed while the parameters move.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from bethe_ising import degree_laws
from bethe_ising._numerics import (
    cavity_message,
    grouped_sum,
    log_cosh,
    mean_and_stderr,
    two_spin_correlation,
)
from bethe_ising.cavity import FieldPopulation, scalar_bethe_fixed_point
from bethe_ising.degree_laws import DegreeLaw
from bethe_ising.errors import StepTooSmall
from bethe_ising.rng import as_generator


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def __iter__(self):
        yield self.value
        yield self.stderr


@dataclass(frozen=True)
class ThermoPoint:
    beta: float
    B: float
    phi: float
    M: float
    U: float
    chi: float = math.nan
    C: float = math.nan
    phi_se: float = 0.0
    M_se: float = 0.0
    U_se: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _pool_draws(pop: FieldPopulation, rng, size: int) -> np.ndarray:
    return pop.samples[rng.integers(0, pop.size, size=size)]


def _params(pop, beta, B):
    beta = pop.beta if beta is None else float(beta)
    B = pop.B if B is None else float(B)
    return beta, B


def _pressure_samples(pop: FieldPopulation, root_law: DegreeLaw, beta: float, B: float,
                      mc_samples: int, rng) -> np.ndarray:
    """Per-draw values whose mean is the pressure (edge and vertex draws paired)."""
    B = abs(B)
    tb = math.tanh(beta)
    pbar = root_law.mean

    x1 = np.tanh(_pool_draws(pop, rng, mc_samples))
    x2 = np.tanh(_pool_draws(pop, rng, mc_samples))
    edge_s = np.log1p(tb * x1 * x2)

    L = degree_laws.sample(root_law, rng, mc_samples)
    x = np.tanh(_pool_draws(pop, rng, int(L.sum())))
    with np.errstate(divide="ignore"):
        up = B + grouped_sum(np.log1p(tb * x), L)
        down = -B + grouped_sum(np.log1p(-tb * x), L)
    vertex_s = np.logaddexp(up, down)
    return 0.5 * pbar * float(log_cosh(beta)) - 0.5 * pbar * edge_s + vertex_s


def pressure(pop: FieldPopulation, root_law: DegreeLaw, beta=None, B=None,
             mc_samples: int = 10**5, rng=None) -> Estimate:
    """Limiting pressure per vertex.

    ``phi = (P/2) log cosh(beta) - (P/2) E log(1 + tb x1 x2)
    + E log(e^B prod(1 + tb x_i) + e^-B prod(1 - tb x_i))``
    with ``tb = tanh(beta)``, ``x = tanh(h)``, ``L`` factors drawn from the
    root law and ``P`` its mean. Products are evaluated as sums of
    ``log1p`` terms. Negative ``B`` is handled by the symmetry
    ``phi(beta, -B) = phi(beta, B)``; the pool must then belong to ``|B|``.
    """
    rng = as_generator(rng)
    beta, B = _params(pop, beta, B)
    return Estimate(*mean_and_stderr(_pressure_samples(pop, root_law, beta, B, mc_samples, rng)))


def pressure_difference(pop: FieldPopulation, root_law: DegreeLaw, lo: tuple, hi: tuple,
                        mc_samples: int = 10**5, rng=None) -> Estimate:
    """``phi(*hi) - phi(*lo)`` for one pool, using the same draws at both points.

    ``lo`` and ``hi`` are ``(beta, B)`` pairs. Because the draws are shared
    the standard error is that of the paired differences, which is what a
    finite-difference derivative needs.
    """
    seed = as_generator(rng).integers(2**63)
    a = _pressure_samples(pop, root_law, *lo, mc_samples, np.random.default_rng(seed))
    b = _pressure_samples(pop, root_law, *hi, mc_samples, np.random.default_rng(seed))
    return Estimate(*mean_and_stderr(b - a))


def magnetization(pop: FieldPopulation, root_law: DegreeLaw, beta=None, B=None,
                  mc_samples: int = 10**5, rng=None) -> Estimate:
    """``M = E tanh(B + sum_{i<=L} atanh(tanh(beta) tanh(h_i)))``."""
    rng = as_generator(rng)
    beta, B = _params(pop, beta, B)
    L = degree_laws.sample(root_law, rng, mc_samples)
    h = _pool_draws(pop, rng, int(L.sum()))
    vals = np.tanh(B + grouped_sum(cavity_message(beta, h), L))
    return Estimate(*mean_and_stderr(vals))


def internal_energy(pop: FieldPopulation, degree_mean: float, beta=None,
                    mc_samples: int = 10**5, rng=None) -> Estimate:
    """``U = -(P/2) E[(tb + x1 x2) / (1 + tb x1 x2)]`` over pairs of pool draws."""
    rng = as_generator(rng)
    beta = pop.beta if beta is None else float(beta)
    h1 = _pool_draws(pop, rng, mc_samples)
    h2 = _pool_draws(pop, rng, mc_samples)
    m, se = mean_and_stderr(two_spin_correlation(beta, h1, h2))
    return Estimate(-0.5 * degree_mean * m, 0.5 * degree_mean * se)


def _centered_difference(x, y, y_se, tolerance, what):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("need at least three grid points")
    dx = x[2:] - x[:-2]
    if np.any(dx <= 0):
        raise ValueError("grid must be strictly increasing")
    d = (y[2:] - y[:-2]) / dx
    se = None
    if y_se is not None:
        y_se = np.asarray(y_se, dtype=float)
        se = np.hypot(y_se[2:], y_se[:-2]) / dx
        if tolerance is not None and np.any(se > tolerance):
            worst = float(se.max())
            raise StepTooSmall(f"{what}: Monte Carlo noise {worst:.3g} exceeds tolerance {tolerance:.3g}")
    return x[1:-1], d, se


def susceptibility(B_grid, M_values, M_stderr=None, tolerance=None):
    """Centered difference ``dM/dB`` at the interior points of a field grid.

    Each ``M`` value must come from a pool solved at its own ``B``: unlike
    the first derivatives of the pressure, this one depends on how the
    fixed point moves with ``B``. Returns ``(B_mid, chi, chi_se)``.
    """
    B_grid = np.asarray(B_grid, dtype=float)
    if np.any(B_grid <= 0):
        raise ValueError("field grid must stay positive")
    return _centered_difference(B_grid, M_values, M_stderr, tolerance, "susceptibility")


def specific_heat(beta_grid, U_values, U_stderr=None, tolerance=None):
    """``C = -beta**2 dU/dbeta`` at interior grid points (centered difference).

    Convergence of the finite-graph specific heat to this value is
    conjectural; callers should label it so. Returns ``(beta_mid, C, C_se)``.
    """
    b, d, se = _centered_difference(beta_grid, U_values, U_stderr, tolerance, "specific heat")
    c = -(b**2) * d
    return b, c, None if se is None else b**2 * se


def critical_beta(offspring_mean: float) -> float:
    """``atanh(1 / mean)`` for a supercritical offspring mean, else ``inf``."""
    if offspring_mean <= 0:
        raise ValueError("offspring mean must be positive")
    if offspring_mean <= 1:
        return math.inf
    return math.atanh(1.0 / offspring_mean)


def bethe_lattice_point(k: int, beta: float, B: float, tol: float = 1e-14) -> ThermoPoint:
    """Deterministic evaluation for the ``k``-regular Bethe lattice.

    With every root having ``k`` neighbours and every other vertex ``k-1``
    children the fixed point is a single number and all expectations
    collapse; no Monte Carlo is involved. ``chi`` is left as NaN.
    """
    if B == 0:
        raise ValueError("B = 0 is a limit; evaluate at small positive fields instead")
    h = scalar_bethe_fixed_point(k - 1, beta, abs(B), tol=tol)
    x = math.tanh(h)
    tb = math.tanh(beta)
    aB = abs(B)
    phi = (0.5 * k * float(log_cosh(beta)) - 0.5 * k * math.log1p(tb * x * x)
           + float(np.logaddexp(aB + k * math.log1p(tb * x), -aB + k * math.log1p(-tb * x))))
    M = math.tanh(aB + k * cavity_message(beta, h))
    U = -0.5 * k * (tb + x * x) / (1.0 + tb * x * x)
    return ThermoPoint(beta, B, phi, math.copysign(M, B), U)


def free_pressure(B: float) -> float:
    """``log(2 cosh B)``: the pressure of independent spins (``beta = 0``)."""
    return math.log(2.0) + float(log_cosh(B))


def extrapolate_to_zero_field(fields, values) -> float:
    """Linear extrapolation to ``B = 0`` from the two smallest fields."""
    fields = np.asarray(fields, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(fields)
    b0, b1 = fields[order[:2]]
    v0, v1 = values[order[:2]]
    return float(v0 - b0 * (v1 - v0) / (b1 - b0))
