"""Population dynamics for the distributional cavity recursion.

The law of the cavity field is represented by a pool of ``N`` samples. One
iteration replaces every sample by ``B + sum_{i<=K} u(h_{J_i})`` where
``K`` is drawn from the offspring law, the ``J_i`` are uniform pool
indices and ``u(h) = atanh(tanh(beta) tanh(h))``.

:func:`solve` runs a free start (all samples ``B``) and a plus start (all
samples ``+inf``) with the same ``K`` and ``J`` draws. Because the update is
monotone in every input, the free pool then stays pointwise below the plus
pool, and the fixed point is bracketed between them.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from bethe_ising import degree_laws
from bethe_ising._numerics import cavity_message, grouped_sum, mean_and_stderr
from bethe_ising.degree_laws import DegreeLaw
from bethe_ising.errors import NotConverged, SizeMismatch
from bethe_ising.rng import as_generator

logger = logging.getLogger(__name__)

DEFAULT_POOL_SIZE = 10**5
DEFAULT_TOL = 1e-3
# children drawn per vectorized block; bounds peak memory for heavy tails
_BLOCK_CHILDREN = 1 << 22


@dataclass(frozen=True, eq=False)
class FieldPopulation:
    samples: np.ndarray
    beta: float
    B: float
    t: int = 0

    @property
    def size(self) -> int:
        return int(self.samples.size)

    @property
    def x(self) -> np.ndarray:
        """``tanh`` of the samples, the quantity that enters every formula."""
        return np.tanh(self.samples)

    def mean_and_stderr(self) -> tuple[float, float]:
        return mean_and_stderr(self.samples)

    @classmethod
    def constant(cls, value: float, size: int, beta: float, B: float) -> "FieldPopulation":
        return cls(np.full(size, float(value)), float(beta), float(B), 0)


def _draws(offspring_law: DegreeLaw, size: int, rng):
    k = degree_laws.sample(offspring_law, rng, size)
    j = rng.integers(0, size, size=int(k.sum()))
    return k, j


def _apply(samples: np.ndarray, k: np.ndarray, j: np.ndarray, beta: float, B: float) -> np.ndarray:
    """One recursion step with given offspring counts and parent indices."""
    out = np.empty(samples.size)
    ends = np.cumsum(k)
    start_sample, start_child = 0, 0
    while start_sample < samples.size:
        # largest block whose children fit in the budget (always at least one sample)
        stop = int(np.searchsorted(ends, start_child + _BLOCK_CHILDREN, side="right"))
        stop = max(stop, start_sample + 1)
        stop_child = int(ends[stop - 1])
        msg = cavity_message(beta, samples[j[start_child:stop_child]])
        out[start_sample:stop] = B + grouped_sum(msg, k[start_sample:stop])
        start_sample, start_child = stop, stop_child
    return out


def iterate(pop: FieldPopulation, offspring_law: DegreeLaw, rng) -> FieldPopulation:
    """Apply the cavity recursion once; the old pool is read, never modified."""
    if pop.size < 1:
        raise ValueError("empty population")
    rng = as_generator(rng)
    k, j = _draws(offspring_law, pop.size, rng)
    new = _apply(pop.samples, k, j, pop.beta, pop.B)
    return FieldPopulation(new, pop.beta, pop.B, pop.t + 1)


def w1_distance(a, b) -> float:
    """Exact Wasserstein-1 distance between two equal-size empirical laws.

    In one dimension the optimal coupling matches order statistics.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise SizeMismatch(f"pool sizes differ: {a.size} vs {b.size}")
    return float(np.mean(np.abs(np.sort(a) - np.sort(b))))


@dataclass
class FixedPointResult:
    """Outcome of :func:`solve`.

    ``population`` is the free-start pool (the estimate of the fixed point),
    ``upper`` the plus-start pool. Distances are W1 between ``tanh`` pools.
    """

    population: FieldPopulation
    upper: FieldPopulation
    w1_residual: float
    bracket_gap: float
    iterations: int
    converged: bool
    gap_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    quantile_history: list = field(default_factory=list)

    def diagnostics(self) -> dict:
        h_mean, h_se = self.population.mean_and_stderr()
        return {
            "beta": self.population.beta,
            "B": self.population.B,
            "pool_size": self.population.size,
            "iterations": self.iterations,
            "converged": self.converged,
            "bracket_gap": self.bracket_gap,
            "w1_residual": self.w1_residual,
            "h_mean": h_mean,
            "h_stderr": h_se,
            "gap_history": list(self.gap_history),
        }


QUANTILE_LEVELS = np.linspace(0.05, 0.95, 19)


def solve(offspring_law: DegreeLaw, beta: float, B: float, N: int = DEFAULT_POOL_SIZE,
          t_max: int = 1000, tol: float = DEFAULT_TOL, rng=None, *,
          record_quantiles: bool = False, raise_on_failure: bool = True) -> FixedPointResult:
    """Iterate free and plus starts with shared randomness until they meet.

    Stops once the W1 distance between ``tanh`` of the two pools is at most
    ``tol``. Raises :class:`NotConverged` (carrying the result) when
    ``t_max`` iterations do not suffice, unless ``raise_on_failure`` is off.
    """
    if B <= 0:
        raise ValueError("the cavity solver needs B > 0; take B -> 0 as a limit")
    if N < 1000:
        raise ValueError("pool size must be at least 1000")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    rng = as_generator(rng)
    lo = np.full(N, float(B))
    hi = np.full(N, np.inf)
    gaps, resid, quants = [], [], []
    gap = math.inf
    res = math.inf
    t = 0
    while t < t_max:
        k, j = _draws(offspring_law, N, rng)
        new_lo = _apply(lo, k, j, beta, B)
        hi = _apply(hi, k, j, beta, B)
        x_new = np.tanh(new_lo)
        res = float(np.mean(np.abs(np.sort(x_new) - np.sort(np.tanh(lo)))))
        lo = new_lo
        t += 1
        gap = w1_distance(x_new, np.tanh(hi))
        gaps.append(gap)
        resid.append(res)
        if record_quantiles:
            quants.append((np.quantile(lo, QUANTILE_LEVELS), np.quantile(hi, QUANTILE_LEVELS)))
        if gap <= tol:
            break
    converged = gap <= tol
    result = FixedPointResult(
        FieldPopulation(lo, float(beta), float(B), t),
        FieldPopulation(hi, float(beta), float(B), t),
        res, gap, t, converged, gaps, resid, quants,
    )
    logger.debug("solve beta=%g B=%g: t=%d gap=%.3g", beta, B, t, gap)
    if not converged and raise_on_failure:
        raise NotConverged(f"bracket gap {gap:.3g} > tol {tol:.3g} after {t} iterations", result)
    return result


def scalar_bethe_fixed_point(k_minus_1: int, beta: float, B: float, tol: float = 1e-14,
                             max_iter: int = 10**7) -> float:
    """Fixed point of ``h = B + (k-1) atanh(tanh(beta) tanh(h))`` reached from ``h = B``.

    The iterates increase monotonically, so this is the smallest fixed point
    above ``B``: the cavity field when every vertex has exactly ``k-1``
    children.
    """
    if B < 0:
        raise ValueError("B must be non-negative")
    h = float(B)
    for _ in range(max_iter):
        h_new = B + k_minus_1 * cavity_message(beta, h)
        if abs(h_new - h) <= tol:
            return h_new
        h = h_new
    logger.warning("scalar fixed point stopped at max_iter=%d (last step %.3g)", max_iter, abs(h_new - h))
    return h


def fixed_point_identity_check(pop: FieldPopulation, root_law: DegreeLaw, offspring_law: DegreeLaw,
                               samples: int, rng) -> dict:
    """Monte Carlo check of ``E[L psi(X1, g_L)] = mean(P) E[psi(X1, X2)]``.

    ``X = tanh(h)`` for pool draws ``h``, ``psi(x, y) = x y / (1 + tanh(beta) x y)``
    and ``g_L = tanh(B + sum_{j=2}^L u(h_j))``. The middle form
    ``mean(P) E[psi(X1, g_{K+1})]`` with ``K`` from the offspring law is
    returned as well.
    """
    rng = as_generator(rng)
    beta, B = pop.beta, pop.B
    tb = math.tanh(beta)
    h = pop.samples
    N = h.size

    def psi(x, y):
        return x * y / (1.0 + tb * x * y)

    def cavity_tanh(n_others):
        # tanh(B + sum of n_others incoming messages), per sample
        others = h[rng.integers(0, N, size=int(n_others.sum()))]
        return np.tanh(B + grouped_sum(cavity_message(beta, others), n_others))

    L = degree_laws.sample(root_law, rng, samples)
    x1 = np.tanh(h[rng.integers(0, N, size=samples)])
    g = cavity_tanh(np.maximum(L - 1, 0))
    lhs_s = L * psi(x1, g)

    K = degree_laws.sample(offspring_law, rng, samples)
    x1m = np.tanh(h[rng.integers(0, N, size=samples)])
    mid_s = root_law.mean * psi(x1m, cavity_tanh(K))

    xa = np.tanh(h[rng.integers(0, N, size=samples)])
    xb = np.tanh(h[rng.integers(0, N, size=samples)])
    rhs_s = root_law.mean * psi(xa, xb)

    lhs, lhs_se = mean_and_stderr(lhs_s)
    mid, mid_se = mean_and_stderr(mid_s)
    rhs, rhs_se = mean_and_stderr(rhs_s)
    return {
        "lhs": lhs, "lhs_stderr": lhs_se,
        "middle": mid, "middle_stderr": mid_se,
        "rhs": rhs, "rhs_stderr": rhs_se,
        "stderr": math.hypot(lhs_se, rhs_se),
    }


# -- checkpoints --------------------------------------------------------------

def save_pool(pop: FieldPopulation, path, law: DegreeLaw | None = None, seed: int | None = None,
              extra: dict | None = None) -> None:
    """CSV checkpoint: a ``#``-prefixed JSON header line, then one field per line."""
    header = {"beta": pop.beta, "B": pop.B, "t": pop.t, "N": pop.size,
              "law": None if law is None else law.to_dict(), "seed": seed}
    if extra:
        header.update(extra)
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        np.savetxt(fh, pop.samples, fmt="%.17g")


def load_pool(path) -> tuple[FieldPopulation, dict]:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{Path(path).name}: missing JSON header line")
        header = json.loads(first[1:])
        samples = np.loadtxt(fh, dtype=float, ndmin=1)
    pop = FieldPopulation(samples, float(header["beta"]), float(header["B"]), int(header["t"]))
    return pop, header
