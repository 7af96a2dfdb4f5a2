"""Degree distributions, their size-biased laws, and tail diagnostics.

A :class:`DegreeLaw` is a probability mass function on ``0..k_max``. Laws on
the whole of the non-negative integers (power laws, Poisson) are truncated
at ``k_max`` and renormalized; the discarded tail mass is kept in
``truncated_mass``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import stats

from bethe_ising.errors import ZeroMean
from bethe_ising.rng import as_generator

DEFAULT_POWER_LAW_KMAX = 10**6


@dataclass(frozen=True, eq=False)
class DegreeLaw:
    """Probability mass function over degrees ``0..k_max``.

    Parameters
    ----------
    pmf : array_like
        ``pmf[k]`` is the probability of degree ``k``.
    family : str
        One of ``"power_law"``, ``"poisson"``, ``"regular"``, ``"explicit"``.
    params : dict
        Family parameters, enough to rebuild the law with :func:`from_dict`.
    truncated_mass : float
        Mass of the untruncated law beyond ``k_max`` (before renormalization).
    """

    pmf: np.ndarray
    family: str = "explicit"
    params: dict = field(default_factory=dict)
    truncated_mass: float = 0.0

    def __post_init__(self):
        pmf = np.array(self.pmf, dtype=float, copy=True)
        if pmf.ndim != 1 or pmf.size == 0:
            raise ValueError("pmf must be a non-empty 1-D sequence")
        if np.any(pmf < 0) or not np.all(np.isfinite(pmf)):
            raise ValueError("pmf entries must be finite and non-negative")
        total = math.fsum(pmf)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {total!r}, not 1")
        # trailing zeros carry no information and make k_max misleading
        nz = np.flatnonzero(pmf)
        pmf = pmf[: nz[-1] + 1]
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    @property
    def k_max(self) -> int:
        return self.pmf.size - 1

    @cached_property
    def mean(self) -> float:
        return math.fsum(np.arange(self.pmf.size) * self.pmf)

    @cached_property
    def second_moment(self) -> float:
        k = np.arange(self.pmf.size, dtype=float)
        return math.fsum(k * k * self.pmf)

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.pmf)
        c[-1] = 1.0
        return c

    @cached_property
    def tail(self) -> np.ndarray:
        """``tail[k] = sum_{i >= k} pmf[i]`` for ``k = 0..k_max``."""
        t = np.cumsum(self.pmf[::-1])[::-1].copy()
        t[0] = 1.0
        return t

    def to_dict(self) -> dict:
        d = {"family": self.family, "params": dict(self.params), "k_max": self.k_max}
        if self.family == "explicit":
            d["pmf"] = self.pmf.tolist()
        return d

    def __repr__(self):
        return f"DegreeLaw(family={self.family!r}, params={self.params!r}, k_max={self.k_max}, mean={self.mean:.6g})"


def _normalized(weights) -> tuple[np.ndarray, float]:
    weights = np.asarray(weights, dtype=float)
    s = weights.sum()
    pmf = weights / s
    # push the rounding residue onto the largest entry
    pmf[np.argmax(pmf)] += 1.0 - math.fsum(pmf)
    return pmf, s


def regular(k: int) -> DegreeLaw:
    """Point mass at degree ``k``."""
    if k < 0:
        raise ValueError("degree must be non-negative")
    pmf = np.zeros(k + 1)
    pmf[k] = 1.0
    return DegreeLaw(pmf, "regular", {"k": int(k)})


def poisson(lam: float, k_max: int | None = None) -> DegreeLaw:
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if k_max is None:
        k_max = int(math.ceil(lam + 40.0 * math.sqrt(lam) + 40.0))
    k = np.arange(k_max + 1)
    weights = stats.poisson.pmf(k, lam)
    pmf, kept = _normalized(weights)
    return DegreeLaw(pmf, "poisson", {"lam": float(lam), "k_max": int(k_max)},
                     truncated_mass=max(0.0, 1.0 - kept))


def power_law(tau: float, k_min: int = 1, k_max: int = DEFAULT_POWER_LAW_KMAX) -> DegreeLaw:
    """``pmf[k]`` proportional to ``k**-tau`` on ``k_min..k_max``.

    The truncated mass is computed against the untruncated law using the
    Hurwitz zeta function.
    """
    if tau <= 1:
        raise ValueError("tau must exceed 1 for a normalizable power law")
    if k_min < 1 or k_max < k_min:
        raise ValueError("need 1 <= k_min <= k_max")
    k = np.arange(k_max + 1, dtype=float)
    weights = np.zeros(k_max + 1)
    weights[k_min:] = k[k_min:] ** (-tau)
    pmf, kept = _normalized(weights)
    from scipy.special import zeta

    full = float(zeta(tau, k_min))
    return DegreeLaw(
        pmf,
        "power_law",
        {"tau": float(tau), "k_min": int(k_min), "k_max": int(k_max)},
        truncated_mass=max(0.0, 1.0 - kept / full),
    )


def explicit(pmf) -> DegreeLaw:
    return DegreeLaw(np.asarray(pmf, dtype=float), "explicit", {})


def size_biased(law: DegreeLaw) -> DegreeLaw:
    """Size-biased law ``rho_k = (k + 1) P_{k+1} / mean(P)``.

    This is the offspring law of every non-root vertex of the local tree
    limit. A regular law maps to the regular law one degree lower.
    """
    if law.mean <= 0:
        raise ZeroMean("size-biased law undefined for a law with zero mean")
    if law.family == "regular":
        return regular(law.params["k"] - 1)
    k = np.arange(1, law.pmf.size, dtype=float)
    rho = k * law.pmf[1:] / law.mean
    rho, _ = _normalized(rho)
    params = {"size_biased_of": law.to_dict()}
    return DegreeLaw(rho, "explicit", params, truncated_mass=law.truncated_mass)


def tail_sum(law: DegreeLaw, k: int) -> float:
    """``sum_{i >= k} pmf[i]``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > law.k_max:
        return 0.0
    return float(law.tail[k])


@dataclass(frozen=True)
class TailCheck:
    """Smallest ``c`` with ``tail(k) <= c * k**-(tau-1)`` on the support."""

    tau: float
    c: float
    argmax_k: int
    asymptotic_c: float


def verify_strongly_finite_mean(law: DegreeLaw, tau: float) -> TailCheck:
    """Fit the constant of the tail bound ``sum_{i>=k} P_i <= c k^{-(tau-1)}``.

    ``asymptotic_c`` is ``tail(k) * k**(tau-1)`` at the largest supported
    ``k``, which for a pure power law approaches the continuum constant.
    """
    if tau <= 2:
        raise ValueError("strongly finite mean needs tau > 2")
    k = np.arange(1, law.k_max + 1, dtype=float)
    if k.size == 0:
        return TailCheck(tau, 0.0, 1, 0.0)
    ratio = law.tail[1:] * k ** (tau - 1.0)
    i = int(np.argmax(ratio))
    return TailCheck(float(tau), float(ratio[i]), int(k[i]), float(ratio[-1]))


def sample(law: DegreeLaw, rng, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. degrees by inverse-CDF lookup."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = as_generator(rng)
    u = rng.random(n)
    out = np.searchsorted(law.cdf, u, side="right")
    return np.minimum(out, law.k_max).astype(np.int64)


# -- serialization -----------------------------------------------------------

def from_dict(d: dict) -> DegreeLaw:
    """Inverse of :meth:`DegreeLaw.to_dict`; also accepts hand-written specs.

    ``{"family": "power_law", "params": {"tau": 2.5}, "k_max": 10000}``
    """
    family = d["family"]
    params = dict(d.get("params", {}))
    k_max = d.get("k_max", params.pop("k_max", None))
    if family == "regular":
        return regular(int(params["k"]))
    if family == "poisson":
        return poisson(float(params["lam"]), None if k_max is None else int(k_max))
    if family == "power_law":
        return power_law(
            float(params["tau"]),
            int(params.get("k_min", 1)),
            DEFAULT_POWER_LAW_KMAX if k_max is None else int(k_max),
        )
    if family == "explicit":
        if "pmf" in d:
            return DegreeLaw(np.asarray(d["pmf"], dtype=float), "explicit", params)
        if "size_biased_of" in params:
            return size_biased(from_dict(params["size_biased_of"]))
        raise ValueError("explicit law needs a 'pmf' entry")
    raise ValueError(f"unknown degree-law family {family!r}")


def save_json(law: DegreeLaw, path) -> None:
    Path(path).write_text(json.dumps(law.to_dict(), indent=2))


def load_json(path) -> DegreeLaw:
    return from_dict(json.loads(Path(path).read_text()))


def save_csv(law: DegreeLaw, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "p_k"])
        for k, p in enumerate(law.pmf):
            w.writerow([k, repr(float(p))])


def load_csv(path) -> DegreeLaw:
    ks, ps = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            ks.append(int(row["k"]))
            ps.append(float(row["p_k"]))
    pmf = np.zeros(max(ks) + 1)
    pmf[ks] = ps
    s = math.fsum(pmf)
    if abs(s - 1.0) > 1e-9:
        raise ValueError(f"CSV pmf sums to {s}")
    if abs(s - 1.0) > 1e-12:
        pmf, _ = _normalized(pmf)
    return explicit(pmf)
