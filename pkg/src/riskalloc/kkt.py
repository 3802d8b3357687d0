"""First-order necessary optimality conditions on the unit simplex.

At an optimal allocation the per-alternative residual

    g_i(K) = E[R_i/g] (1 + (rho/n) E[log g]) - (rho/n) E[log g * R_i/g]

equals 1 for every alternative with positive weight and is at most 1 for
the rest (the simplex multiplier is identically 1, and the nonnegativity
multipliers are 1 - g_i on inactive components).  ``certify`` checks a
candidate against both branches; ``solve_two_asset_betting`` finds the
risky weight where the residual crosses 1 for the classic +/- one-half
bet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, NoConvergence
from .objective import (
    ContinuousEvaluator,
    DiscreteEvaluator,
    Moments,
    RiskSpec,
    as_allocation,
)
from .payoffs import CompoundReturnDistribution, build_discrete_compound, two_point_betting

# weights above this threshold are treated as active (equality branch)
ACTIVITY_TOL = 1e-9
DEFAULT_KKT_TOL = 1e-6

_EvaluatorLike = Union[CompoundReturnDistribution, DiscreteEvaluator, ContinuousEvaluator]


@dataclass(frozen=True)
class KktReport:
    """Residuals and branch verdicts for a candidate allocation.

    ``satisfied`` means every active component has residual within ``tol``
    of 1 and every inactive one is below 1 + tol; ``max_violation`` is the
    largest margin among violated components, 0 when satisfied.
    """

    residuals: np.ndarray
    active: np.ndarray
    satisfied: bool
    max_violation: float
    tol: float


def _as_evaluator(dist_or_eval: _EvaluatorLike, spec: RiskSpec):
    if isinstance(dist_or_eval, CompoundReturnDistribution):
        return DiscreteEvaluator(dist_or_eval, spec)
    return dist_or_eval


def residuals_from_moments(mom: Moments, spec: RiskSpec) -> np.ndarray:
    rho, n = spec.rho, spec.n
    return mom.e_ratio * (1.0 + rho / n * mom.e_log) - (rho / n) * mom.e_log_ratio


def kkt_residuals(dist: _EvaluatorLike, k, spec: RiskSpec) -> np.ndarray:
    """Per-alternative optimality residuals g_i(K) as exact moment sums."""
    evaluator = _as_evaluator(dist, spec)
    return residuals_from_moments(evaluator.moments(as_allocation(k)), spec)


def certify(
    dist: _EvaluatorLike, k, spec: RiskSpec, tol: float = DEFAULT_KKT_TOL
) -> KktReport:
    """Check the equality/inequality branches at a candidate allocation."""
    if not tol > 0.0:
        raise DomainError(f"tol must be > 0, got {tol!r}")
    alloc = as_allocation(k)
    g = kkt_residuals(dist, alloc, spec)
    active = alloc.values > ACTIVITY_TOL
    margins = np.where(active, np.abs(g - 1.0), np.maximum(g - 1.0, 0.0))
    violated = margins > tol
    max_violation = float(margins[violated].max()) if violated.any() else 0.0
    return KktReport(
        residuals=g,
        active=active,
        satisfied=not bool(violated.any()),
        max_violation=max_violation,
        tol=float(tol),
    )


def solve_two_asset_betting(p: float, rho: float, tol: float = 1e-10) -> float:
    """Optimal risky weight for the +/- one-half bet at win probability p.

    Solves g_2(k2) = 1 on [0, 1] for the single-period two-point model by
    bracketing bisection refined with a few secant steps.  At the simplex
    corners the weighted identity sum_i K_i g_i = 1 makes the residual of
    the fully weighted alternative equal 1 identically, so the corner
    tests use the companion alternative: k2 = 0 is optimal when
    g_2(0) <= 1 and k2 = 1 when g_1(1) <= 1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if not rho >= 0.0:
        raise DomainError(f"rho must be >= 0, got {rho!r}")
    if not tol > 0.0:
        raise DomainError(f"tol must be > 0, got {tol!r}")

    spec = RiskSpec(rho=rho, n=1)
    dist = build_discrete_compound(two_point_betting(p), 1, atom_cap=16)
    evaluator = DiscreteEvaluator(dist, spec)

    def residuals(k2: float) -> np.ndarray:
        return residuals_from_moments(
            evaluator.moments(np.array([1.0 - k2, k2])), spec
        )

    if residuals(0.0)[1] <= 1.0 + 1e-12:
        return 0.0
    if residuals(1.0)[0] <= 1.0 + 1e-12:
        return 1.0

    def f(k2: float) -> float:
        return float(residuals(k2)[1]) - 1.0

    # interior root: f(0) > 0 and f just left of 1 is negative
    lo, f_lo = 0.0, f(0.0)
    hi = 1.0 - 1e-9
    f_hi = f(hi)
    if f_lo <= 0.0 or f_hi >= 0.0:
        raise NoConvergence(
            f"residual does not bracket a root on [0, 1]: f(0)={f_lo!r}, f(1-)={f_hi!r}"
        )
    for _ in range(100):
        if hi - lo <= 1e-12:
            break
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid > 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    root = 0.5 * (lo + hi)
    f_root = f(root)
    # secant polish inside the final bracket
    a, fa, b, fb = lo, f_lo, hi, f_hi
    for _ in range(3):
        if fb == fa:
            break
        cand = b - fb * (b - a) / (fb - fa)
        if not lo <= cand <= hi:
            break
        a, fa = b, fb
        b, fb = cand, f(cand)
        if abs(fb) < abs(f_root):
            root, f_root = cand, fb
    if abs(f_root) > tol:
        raise NoConvergence(
            f"residual {f_root!r} at k2={root!r} exceeds tolerance {tol!r}"
        )
    return float(root)
