"""Maximization of the risk-sensitive objective over the unit simplex.

``maximize`` runs projected gradient ascent with backtracking; the model
gradient is available in closed form, the feasible set is the simplex,
and every converged result is certified against the first-order
optimality residuals.  Because the objective may be nonconvex for large
risk aversion, ``grid_refine`` provides an exhaustive refined-grid oracle
for up to three alternatives, and ``maximize`` supports seeded random
restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.random import PCG64, Generator

from .errors import DimensionTooLarge, ValidationError
from .kkt import ACTIVITY_TOL, DEFAULT_KKT_TOL, KktReport, certify
from .objective import AllocationVector, RiskSpec

ARMIJO_SLOPE = 1e-4
VALUE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerOptions:
    max_iters: int = 500
    step_init: float = 1.0
    backtrack: float = 0.5
    grad_tol: float = 1e-10
    kkt_tol: float = DEFAULT_KKT_TOL
    restarts: int = 5
    restart_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 1:
            raise ValidationError("max_iters and restarts must be positive")
        if not self.step_init > 0 or not self.grad_tol > 0 or not self.kkt_tol > 0:
            raise ValidationError("step_init, grad_tol and kkt_tol must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValidationError(f"backtrack must lie in (0, 1), got {self.backtrack!r}")


@dataclass(frozen=True)
class OptimizationResult:
    k_star: AllocationVector
    u_star: float
    iterations: int
    converged: bool
    kkt: KktReport
    trace: Optional[list[tuple[int, float]]] = None


def project_to_simplex(v) -> AllocationVector:
    """Euclidean projection onto the unit simplex (sort-based).

    Identity on feasible points; componentwise max(v - theta, 0) with the
    threshold theta determined from the sorted cumulative sums.
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise ValidationError("cannot project an empty vector")
    if np.all(v >= 0.0) and abs(float(v.sum()) - 1.0) <= 1e-10:
        return AllocationVector(v)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    positive = u - css / idx > 0.0
    last = np.nonzero(positive)[0][-1]
    theta = css[last] / (last + 1.0)
    return AllocationVector(np.maximum(v - theta, 0.0))


def _projected_step(k: np.ndarray, grad: np.ndarray, step: float) -> np.ndarray:
    return project_to_simplex(k + step * grad).values


def _gradient_map_norm(k: np.ndarray, grad: np.ndarray) -> float:
    # fixed-probe gradient mapping; zero exactly at stationary points,
    # including simplex vertices and faces
    return float(np.linalg.norm(_projected_step(k, grad, 1.0) - k))


def _ascend(evaluator, start: np.ndarray, opts: OptimizerOptions, want_trace: bool):
    k = project_to_simplex(start).values
    u = evaluator.value(k).u
    trace = [(0, u)] if want_trace else None
    stalls = 0
    iterations = 0
    converged = False

    for iterations in range(1, opts.max_iters + 1):
        grad = evaluator.gradient(k)
        if _gradient_map_norm(k, grad) <= opts.grad_tol:
            converged = True
            iterations -= 1
            break
        step = opts.step_init
        accepted = False
        for _ in range(60):
            k_new = _projected_step(k, grad, step)
            move = k_new - k
            if not np.any(move):
                step *= opts.backtrack
                continue
            u_new = evaluator.value(k_new).u
            if u_new >= u + ARMIJO_SLOPE * float(grad @ move) - 1e-15:
                accepted = True
                break
            step *= opts.backtrack
        if not accepted:
            stalls += 1
            if stalls >= 50:
                break
            continue
        stalls = 0
        k, u = k_new, u_new
        if want_trace:
            trace.append((iterations, u))
    return k, u, iterations, converged, trace


def _snap_inactive(evaluator, k: np.ndarray, u: float):
    """Zero out weights below the activity threshold when value allows.

    Components this small are already classified as inactive by the
    optimality check; pinning them to exactly 0 reports clean boundary
    solutions.  The snap is kept only if the objective does not drop by
    more than the tie tolerance.
    """
    tiny = (k > 0.0) & (k <= ACTIVITY_TOL)
    if not tiny.any() or tiny.all():
        return k, u
    snapped = np.where(tiny, 0.0, k)
    snapped /= snapped.sum()
    u_snapped = evaluator.value(snapped).u
    if u_snapped >= u - VALUE_TIE_TOL:
        return snapped, u_snapped
    return k, u


def _prefer(candidate, incumbent):
    """Pick the better (u, k, ...) tuple; ties go to the larger first weight."""
    if incumbent is None:
        return candidate
    u_c, k_c = candidate[0], candidate[1]
    u_i, k_i = incumbent[0], incumbent[1]
    if u_c > u_i + VALUE_TIE_TOL:
        return candidate
    if u_c >= u_i - VALUE_TIE_TOL and k_c[0] > k_i[0]:
        return candidate
    return incumbent


def maximize(
    evaluator,
    spec: RiskSpec,
    opts: Optional[OptimizerOptions] = None,
    init=None,
    want_trace: bool = False,
) -> OptimizationResult:
    """Projected gradient ascent with backtracking over the simplex.

    With ``init`` given, ascends from that point alone; otherwise from the
    uniform center plus ``restarts - 1`` seeded random feasible starts,
    returning the best.  Terminates when the unit-step gradient mapping
    norm drops to ``grad_tol`` or after ``max_iters`` iterations; a line
    search stalled for 50 consecutive iterations returns the best iterate
    with ``converged=False``.  The reported result is always certified
    against the optimality residuals at ``kkt_tol``.
    """
    opts = opts or OptimizerOptions()
    m = evaluator.m
    if init is not None:
        starts = [np.asarray(init.values if isinstance(init, AllocationVector) else init, dtype=float)]
    else:
        starts = [np.full(m, 1.0 / m)]
        rng = Generator(PCG64(opts.restart_seed))
        for _ in range(opts.restarts - 1):
            starts.append(rng.dirichlet(np.ones(m)))

    best = None
    for start in starts:
        k, u, iters, conv, trace = _ascend(evaluator, start, opts, want_trace)
        k, u = _snap_inactive(evaluator, k, u)
        best = _prefer((u, k, iters, conv, trace), best)

    u_star, k_star, iterations, converged, trace = best
    report = certify(evaluator, AllocationVector(k_star), spec, tol=opts.kkt_tol)
    return OptimizationResult(
        k_star=AllocationVector(k_star),
        u_star=u_star,
        iterations=iterations,
        converged=bool(converged and report.satisfied),
        kkt=report,
        trace=trace,
    )


def _simplex_grid(center: np.ndarray, half_width: float, points: int, m: int):
    """Feasible grid points in a box around ``center`` (free coordinates
    are components 2..m; the first takes the slack)."""
    if m == 1:
        return [np.array([1.0])]
    axes = []
    for i in range(1, m):
        lo = max(center[i] - half_width, 0.0)
        hi = min(center[i] + half_width, 1.0)
        axes.append(np.linspace(lo, hi, points))
    out = []
    if m == 2:
        for k2 in axes[0]:
            out.append(np.array([1.0 - k2, k2]))
    else:
        for k2 in axes[0]:
            for k3 in axes[1]:
                if k2 + k3 <= 1.0 + 1e-12:
                    out.append(np.array([max(1.0 - k2 - k3, 0.0), k2, k3]))
    return out


def grid_refine(
    evaluator,
    spec: RiskSpec,
    levels: int = 8,
    points_per_level: int = 33,
) -> OptimizationResult:
    """Exhaustive simplex-grid search refined around the incumbent.

    Independent of the gradient path, so it serves as a brute-force
    oracle for ``maximize`` at desk scale; limited to m <= 3.
    """
    m = evaluator.m
    if m > 3:
        raise DimensionTooLarge(f"grid search supports at most 3 alternatives, got {m}")
    if levels < 1 or points_per_level < 2:
        raise ValidationError("levels must be >= 1 and points_per_level >= 2")

    # level 0 must cover the whole simplex: free coordinates span [0, 1]
    center = np.full(m, 0.5)
    half_width = 0.5
    best = None
    evaluations = 0
    for _ in range(levels):
        for k in _simplex_grid(center, half_width, points_per_level, m):
            u = evaluator.value(k).u
            evaluations += 1
            best = _prefer((u, k), best)
        center = best[1]
        spacing = 2.0 * half_width / (points_per_level - 1)
        half_width = 2.0 * spacing
        if m == 1:
            break

    u_star, k_star = best
    report = certify(evaluator, AllocationVector(k_star), spec, tol=DEFAULT_KKT_TOL)
    return OptimizationResult(
        k_star=AllocationVector(k_star),
        u_star=u_star,
        iterations=evaluations,
        converged=report.satisfied,
        kkt=report,
    )


@dataclass(frozen=True)
class SweepRow:
    rho: float
    result: Optional[OptimizationResult]
    error: Optional[str] = None


def sweep_rho(
    evaluator_factory: Callable[[RiskSpec], object],
    spec: RiskSpec,
    rho_values: Sequence[float],
    opts: Optional[OptimizerOptions] = None,
) -> list[SweepRow]:
    """Solve the allocation problem for each risk weight in order.

    Each solve warm-starts from the previous optimum; rows keep their
    input order and per-row solver failures are recorded without aborting
    the sweep.
    """
    if len(rho_values) == 0:
        raise ValidationError("rho_values must be nonempty")
    rows: list[SweepRow] = []
    warm = None
    for rho in rho_values:
        if not rho >= 0.0:
            rows.append(SweepRow(rho=float(rho), result=None, error="rho must be >= 0"))
            continue
        row_spec = replace(spec, rho=float(rho))
        try:
            evaluator = evaluator_factory(row_spec)
            result = maximize(evaluator, row_spec, opts, init=warm)
            warm = result.k_star
            rows.append(SweepRow(rho=float(rho), result=result))
        except Exception as exc:  # propagate per-row without aborting
            rows.append(SweepRow(rho=float(rho), result=None, error=str(exc)))
    return rows
