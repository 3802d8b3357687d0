"""Vectorized numpy implementations of the hot evaluation kernels.

These are the reference semantics for the compiled extension: growth dot
products and stage products accumulate in the same index order in both
backends, so per-sample outputs agree bitwise and aggregate sums agree to
rounding.
"""

from __future__ import annotations

import numpy as np


def _growth(returns: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # ordered accumulation over alternatives, matching the compiled kernel
    s = weights[0] * returns[:, 0]
    for i in range(1, returns.shape[1]):
        s += weights[i] * returns[:, i]
    return s


def atom_moments(returns, probs, weights):
    """Probability-weighted growth moments over a finite atom set.

    ``returns`` is (A, m), ``probs`` is (A,), ``weights`` is (m,).  With
    growth s = <weights, returns> per atom, returns the tuple
    ``(E[log s], E[(log s)^2], E[returns_i / s], E[log s * returns_i / s],
    min s)``.  The caller is responsible for rejecting ``min s <= 0``.
    """
    s = _growth(returns, weights)
    min_growth = float(s.min())
    with np.errstate(invalid="ignore", divide="ignore"):
        logs = np.log(s)
        ratio_w = probs / s
    e_log = float(probs @ logs)
    e_log2 = float(probs @ (logs * logs))
    e_ratio = returns.T @ ratio_w
    e_log_ratio = returns.T @ (ratio_w * logs)
    return e_log, e_log2, e_ratio, e_log_ratio, min_growth


def discrete_paths(uniforms, cdf, gross):
    """Compound gross returns along sampled discrete stage paths.

    ``uniforms`` is (N, n) in [0, 1), ``cdf`` the inclusive cumulative atom
    probabilities (last entry 1), ``gross`` the (A, m) per-stage gross
    returns.  Stage outcomes are drawn by inverse CDF; products accumulate
    in stage order.
    """
    idx = np.minimum(np.searchsorted(cdf, uniforms, side="right"), len(cdf) - 1)
    out = np.ones((uniforms.shape[0], gross.shape[1]))
    for k in range(uniforms.shape[1]):
        out *= gross[idx[:, k], :]
    return out


def uniform_paths(uniforms, gross_max):
    """Compound gross returns for per-stage payoffs uniform on (-1, x_max].

    Each stage maps u -> (1 - u) * (1 + x_max), which is uniform on
    (0, 1 + x_max]; the result is the stage-ordered product, always > 0.
    """
    out = np.ones(uniforms.shape[0])
    for k in range(uniforms.shape[1]):
        out *= (1.0 - uniforms[:, k]) * gross_max
    return out


def log_growth_sums(returns, weights):
    """Power sums of log growth over sample rows.

    Returns ``(sum L, sum L^2, sum L^3, sum L^4, min s)`` with
    L = log <weights, returns> per row.
    """
    s = _growth(returns, weights)
    min_growth = float(s.min())
    with np.errstate(invalid="ignore", divide="ignore"):
        logs = np.log(s)
    l2 = logs * logs
    return (
        float(logs.sum()),
        float(l2.sum()),
        float((l2 * logs).sum()),
        float((l2 * l2).sum()),
        min_growth,
    )
