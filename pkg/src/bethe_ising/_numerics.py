"""Small numerically careful helpers shared by the tree and cavity code."""

from __future__ import annotations

import numpy as np

_LOG2 = np.log(2.0)


def log_cosh(x):
    """``log(cosh(x))`` without overflow."""
    ax = np.abs(np.asarray(x, dtype=float))
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LOG2


def cavity_message(beta, h):
    """Field ``atanh(tanh(beta) * tanh(h))`` passed from a child to its parent.

    Where the product is close to 1 the equivalent form
    ``(log cosh(beta + h) - log cosh(beta - h)) / 2`` is used, which stays
    accurate for large ``beta`` and ``h``. An infinite ``h`` (a spin clamped
    to +1) sends exactly ``beta``.
    """
    h = np.asarray(h, dtype=float)
    beta = float(beta)
    with np.errstate(invalid="ignore"):
        p = np.tanh(beta) * np.tanh(h)
        direct = np.arctanh(np.clip(p, -0.5, 0.5))
        stable = 0.5 * (log_cosh(beta + h) - log_cosh(beta - h))
    msg = np.where(np.abs(p) < 0.5, direct, stable)
    msg = np.where(np.isposinf(h), beta, msg)
    msg = np.where(np.isneginf(h), -beta, msg)
    if msg.ndim == 0:
        return float(msg)
    return msg


def two_spin_correlation(beta, h1, h2):
    """``<s1 s2>`` for one edge with coupling ``beta`` and fields ``h1, h2``."""
    tb = np.tanh(beta)
    x = np.tanh(h1) * np.tanh(h2)
    return (tb + x) / (1.0 + tb * x)


def mean_and_stderr(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise ValueError("no samples")
    mean = float(np.mean(values))
    if n == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / np.sqrt(n))


def grouped_sum(values, counts) -> np.ndarray:
    """Sum ``values`` in consecutive groups of sizes ``counts`` (empty groups give 0)."""
    counts = np.asarray(counts, dtype=np.int64)
    owner = np.repeat(np.arange(counts.size), counts)
    return np.bincount(owner, weights=values, minlength=counts.size)
