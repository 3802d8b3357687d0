"""Risk-sensitive growth objective: value, log-variance, and gradients.

The objective for an allocation K over n stages is

    u(K) = (1/n) E[log g(K)] - (rho / (2 n^2)) var(log g(K))

where g(K) = <K, R> is the portfolio growth under the compound return
vector R and rho >= 0 weights the variance penalty.  Three evaluation
routes are provided: exact atom sums for discrete compound distributions,
adaptive quadrature for the uniform two-alternative model (in the
transformed variable where the compound density is gamma-shaped and the
integrand is smooth), and seeded Monte Carlo for any model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import (
    DimensionMismatch,
    DomainError,
    NonPositiveReturn,
    QuadratureNotConverged,
    ValidationError,
)
from .payoffs import (
    DEFAULT_ATOM_CAP,
    CompoundReturnDistribution,
    ContinuousUniform,
    Deterministic,
    DiscreteJoint,
    PayoffModel,
    build_discrete_compound,
    sample_compound,
)

ALLOCATION_SUM_TOL = 1e-10
ALLOCATION_NEG_TOL = -1e-12
VAR_CLAMP_TOL = 1e-12
# documented probe steps so finite-difference checks are reproducible
GRADIENT_FD_STEP = 1e-6
SECOND_DERIVATIVE_FD_STEP = 1e-4


@dataclass(frozen=True)
class AllocationVector:
    """Fractions of accumulated value assigned to each alternative.

    Components are nonnegative (to -1e-12 rounding tolerance) and sum to
    one within 1e-10.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ValidationError("allocation needs at least one component")
        if np.any(values < ALLOCATION_NEG_TOL):
            raise ValidationError(
                f"allocation components must be >= 0, got min {values.min()!r}"
            )
        if abs(float(values.sum()) - 1.0) > ALLOCATION_SUM_TOL:
            raise ValidationError(
                f"allocation components sum to {values.sum()!r}, expected 1 within {ALLOCATION_SUM_TOL}"
            )
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size


def as_allocation(k) -> AllocationVector:
    return k if isinstance(k, AllocationVector) else AllocationVector(np.asarray(k, dtype=float))


@dataclass(frozen=True)
class RiskSpec:
    """Risk-aversion weight rho >= 0 and decision period n >= 1."""

    rho: float
    n: int

    def __post_init__(self):
        if not self.rho >= 0.0:
            raise ValidationError(f"rho must be >= 0, got {self.rho!r}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective value with its mean-log and log-variance components.

    ``u = mean_log - rho / (2 n^2) * var_log`` holds by construction.
    """

    u: float
    mean_log: float
    var_log: float

    @classmethod
    def from_mean_var(cls, mean_log: float, var_log: float, spec: RiskSpec) -> "ObjectiveValue":
        if var_log < 0.0:
            if var_log < -VAR_CLAMP_TOL:
                raise ValidationError(f"log-variance {var_log!r} is negative beyond rounding")
            var_log = 0.0
        u = mean_log - spec.rho / (2.0 * spec.n**2) * var_log
        return cls(u=u, mean_log=mean_log, var_log=var_log)

    @classmethod
    def assemble(cls, e_log: float, e_log2: float, spec: RiskSpec) -> "ObjectiveValue":
        return cls.from_mean_var(e_log / spec.n, e_log2 - e_log * e_log, spec)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings: explicit seed, sample count, and batch size."""

    seed: int
    samples: int
    batch: int = 65_536

    def __post_init__(self):
        if self.samples < 2:
            raise ValidationError(f"samples must be >= 2, got {self.samples!r}")
        if self.batch < 1:
            raise ValidationError(f"batch must be >= 1, got {self.batch!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """Adaptive quadrature tolerances for the continuous evaluator."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_intervals: int = 200

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0 or self.max_intervals < 1:
            raise ValidationError("quadrature tolerances must be positive")


@dataclass(frozen=True)
class Moments:
    """Growth moments needed by the objective, its gradient, and the
    first-order optimality residuals.

    With g = <K, R>: ``e_log = E[log g]``, ``e_log2 = E[(log g)^2]``,
    ``e_ratio[i] = E[R_i / g]``, ``e_log_ratio[i] = E[log g * R_i / g]``.
    """

    e_log: float
    e_log2: float
    e_ratio: np.ndarray
    e_log_ratio: np.ndarray


def _gradient_from_moments(mom: Moments, spec: RiskSpec) -> np.ndarray:
    rho, n = spec.rho, spec.n
    return (1.0 / n) * mom.e_ratio * (1.0 + rho / n * mom.e_log) - (
        rho / n**2
    ) * mom.e_log_ratio


class DiscreteEvaluator:
    """Exact objective evaluation over a finite compound distribution.

    Methods accept raw weight arrays of matching dimension; simplex
    validation happens in the public module functions.  Pure and
    thread-safe: all state is immutable after construction.
    """

    def __init__(self, dist: CompoundReturnDistribution, spec: RiskSpec):
        if dist.n != spec.n:
            raise DimensionMismatch(
                f"distribution compounded over n={dist.n} but spec has n={spec.n}"
            )
        self.dist = dist
        self.spec = spec
        self.m = dist.m

    def _weights(self, k) -> np.ndarray:
        w = k.values if isinstance(k, AllocationVector) else np.asarray(k, dtype=float).ravel()
        if w.size != self.m:
            raise DimensionMismatch(f"allocation has {w.size} components, expected {self.m}")
        return np.ascontiguousarray(w)

    def moments(self, k) -> Moments:
        w = self._weights(k)
        e_log, e_log2, e_ratio, e_log_ratio, min_growth = _kernels.atom_moments(
            self.dist.returns, self.dist.probs, w
        )
        if min_growth <= 0.0:
            raise NonPositiveReturn(
                f"portfolio growth {min_growth!r} is not positive at some atom"
            )
        return Moments(e_log=e_log, e_log2=e_log2, e_ratio=e_ratio, e_log_ratio=e_log_ratio)

    def value(self, k) -> ObjectiveValue:
        mom = self.moments(k)
        return ObjectiveValue.assemble(mom.e_log, mom.e_log2, self.spec)

    def gradient(self, k) -> np.ndarray:
        return _gradient_from_moments(self.moments(k), self.spec)


class ContinuousEvaluator:
    """Quadrature evaluation for the uniform two-alternative model.

    Expectations over the compound net return are integrated in the
    transformed variable t = log(B / gross), B = (1 + x_max)^n, where t is
    gamma-distributed with shape n and the integrand is smooth; this
    removes the density singularity at the lower support endpoint.  The
    domain is truncated at t = n + 40, beyond which the gamma tail mass is
    negligible (< 1e-12 for n <= 20).

    The allocation may put full weight on the risky alternative: the log
    moments stay finite there.  The reciprocal-growth moment diverges at
    exactly that corner; truncation then yields a large finite surrogate,
    which preserves the ordering that optimality checks rely on.
    """

    m = 2

    def __init__(self, x_max: float, spec: RiskSpec, quad: Optional[QuadratureConfig] = None):
        if not x_max > 0.0:
            raise ValidationError(f"x_max must be > 0, got {x_max!r}")
        self.x_max = float(x_max)
        self.spec = spec
        self.quad = quad or QuadratureConfig()
        self._bound = (1.0 + self.x_max) ** spec.n
        self._log_gamma_n = math.lgamma(spec.n)
        self._t_max = spec.n + 40.0

    def _weights(self, k) -> np.ndarray:
        w = k.values if isinstance(k, AllocationVector) else np.asarray(k, dtype=float).ravel()
        if w.size != 2:
            raise DimensionMismatch(f"allocation has {w.size} components, expected 2")
        return w

    def _integrate(self, f) -> float:
        n = self.spec.n
        lgam = self._log_gamma_n

        def integrand(t: float) -> float:
            if t <= 0.0:
                return 0.0
            return f(t) * math.exp((n - 1) * math.log(t) - t - lgam)

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                out = integrate.quad(
                    integrand,
                    0.0,
                    self._t_max,
                    epsabs=self.quad.abs_tol,
                    epsrel=self.quad.rel_tol,
                    limit=self.quad.max_intervals,
                    full_output=1,
                )
            except integrate.IntegrationWarning as exc:
                raise QuadratureNotConverged(str(exc)) from exc
        if len(out) > 3:
            raise QuadratureNotConverged(str(out[3]))
        return float(out[0])

    def _growth(self, w: np.ndarray):
        bound = self._bound
        k1, k2 = float(w[0]), float(w[1])
        return lambda t: k1 + k2 * bound * math.exp(-t)

    def log_moments(self, k) -> tuple[float, float]:
        """(E[log g], E[(log g)^2]) for growth g under allocation k."""
        s = self._growth(self._weights(k))
        e_log = self._integrate(lambda t: math.log(s(t)))
        e_log2 = self._integrate(lambda t: math.log(s(t)) ** 2)
        return e_log, e_log2

    def moments(self, k) -> Moments:
        w = self._weights(k)
        bound = self._bound
        s = self._growth(w)
        e_log = self._integrate(lambda t: math.log(s(t)))
        e_log2 = self._integrate(lambda t: math.log(s(t)) ** 2)
        e_ratio = np.array(
            [
                self._integrate(lambda t: 1.0 / s(t)),
                self._integrate(lambda t: bound * math.exp(-t) / s(t)),
            ]
        )
        e_log_ratio = np.array(
            [
                self._integrate(lambda t: math.log(s(t)) / s(t)),
                self._integrate(lambda t: math.log(s(t)) * bound * math.exp(-t) / s(t)),
            ]
        )
        return Moments(e_log=e_log, e_log2=e_log2, e_ratio=e_ratio, e_log_ratio=e_log_ratio)

    def value(self, k) -> ObjectiveValue:
        e_log, e_log2 = self.log_moments(k)
        return ObjectiveValue.assemble(e_log, e_log2, self.spec)

    def gradient(self, k) -> np.ndarray:
        w = self._weights(k)
        bound = self._bound
        s = self._growth(w)
        e_log = self._integrate(lambda t: math.log(s(t)))
        e_ratio = np.array(
            [
                self._integrate(lambda t: 1.0 / s(t)),
                self._integrate(lambda t: bound * math.exp(-t) / s(t)),
            ]
        )
        e_log_ratio = np.array(
            [
                self._integrate(lambda t: math.log(s(t)) / s(t)),
                self._integrate(lambda t: math.log(s(t)) * bound * math.exp(-t) / s(t)),
            ]
        )
        mom = Moments(e_log=e_log, e_log2=0.0, e_ratio=e_ratio, e_log_ratio=e_log_ratio)
        return _gradient_from_moments(mom, self.spec)


Evaluator = Union[DiscreteEvaluator, ContinuousEvaluator]


def build_evaluator(
    model: PayoffModel,
    spec: RiskSpec,
    atom_cap: int = DEFAULT_ATOM_CAP,
    quad: Optional[QuadratureConfig] = None,
) -> Evaluator:
    """Construct the natural exact evaluator for a payoff model."""
    if isinstance(model, DiscreteJoint):
        return DiscreteEvaluator(build_discrete_compound(model, spec.n, atom_cap), spec)
    if isinstance(model, ContinuousUniform):
        return ContinuousEvaluator(model.x_max, spec, quad)
    if isinstance(model, Deterministic):
        dist = CompoundReturnDistribution(
            returns=np.array([[(1.0 + model.rate) ** spec.n]]),
            probs=np.array([1.0]),
            n=spec.n,
        )
        return DiscreteEvaluator(dist, spec)
    raise ValidationError(f"unsupported model type {type(model).__name__}")


def evaluate_exact(
    dist: CompoundReturnDistribution, k, spec: RiskSpec
) -> ObjectiveValue:
    """Exact objective value as finite sums over the compound atoms."""
    return DiscreteEvaluator(dist, spec).value(as_allocation(k))


def log_variance(dist: CompoundReturnDistribution, k) -> float:
    """Variance of the log growth under allocation k; nonnegative."""
    alloc = as_allocation(k)
    ev = DiscreteEvaluator(dist, RiskSpec(rho=0.0, n=dist.n))
    mom = ev.moments(alloc)
    var = mom.e_log2 - mom.e_log**2
    if var < 0.0:
        if var < -VAR_CLAMP_TOL:
            raise ValidationError(f"log-variance {var!r} is negative beyond rounding")
        var = 0.0
    return var


def evaluate_continuous(
    x_max: float, k, spec: RiskSpec, quad: Optional[QuadratureConfig] = None
) -> ObjectiveValue:
    """Objective for the uniform two-alternative model via quadrature."""
    return ContinuousEvaluator(x_max, spec, quad).value(as_allocation(k))


def gradient_exact(dist: CompoundReturnDistribution, k, spec: RiskSpec) -> np.ndarray:
    """Partial derivatives of the objective in the allocation, ignoring
    the simplex constraint.

    Component i equals
    (1/n) E[R_i/g] (1 + (rho/n) E[log g]) - (rho/n^2) E[log g * R_i/g].
    """
    return DiscreteEvaluator(dist, spec).gradient(as_allocation(k))


def evaluate_mc(
    model: PayoffModel, k, spec: RiskSpec, mc: McConfig
) -> tuple[ObjectiveValue, float]:
    """Monte Carlo objective estimate and its delta-method standard error.

    The sample stream is fixed by ``mc.seed`` and laid out in batches of
    ``mc.batch`` samples; batch b covers sample offsets [b*batch,
    b*batch + count).  Partial power sums combine in batch order, so a run
    is reproducible and equals any partitioned evaluation with the same
    layout bit for bit.  The log-variance uses the unbiased sample
    variance.
    """
    alloc = as_allocation(k)
    if alloc.m != model.m:
        raise DimensionMismatch(
            f"allocation has {alloc.m} components but the model has {model.m}"
        )
    total = mc.samples
    s1 = s2 = s3 = s4 = 0.0
    min_growth = math.inf
    offset = 0
    while offset < total:
        count = min(mc.batch, total - offset)
        batch = sample_compound(model, spec.n, mc.seed, count, offset=offset)
        b1, b2, b3, b4, b_min = _kernels.log_growth_sums(batch, alloc.values)
        s1 += b1
        s2 += b2
        s3 += b3
        s4 += b4
        min_growth = min(min_growth, b_min)
        offset += count
    if min_growth <= 0.0:
        raise NonPositiveReturn(f"portfolio growth {min_growth!r} is not positive")

    n_samples = float(total)
    mu = s1 / n_samples
    m2 = max(s2 / n_samples - mu * mu, 0.0)
    m3 = s3 / n_samples - 3.0 * mu * s2 / n_samples + 2.0 * mu**3
    m4 = (
        s4 / n_samples
        - 4.0 * mu * s3 / n_samples
        + 6.0 * mu * mu * s2 / n_samples
        - 3.0 * mu**4
    )
    var_unbiased = m2 * n_samples / (n_samples - 1.0)

    rho, n = spec.rho, spec.n
    value = ObjectiveValue.from_mean_var(mu / n, var_unbiased, RiskSpec(rho, n))
    # delta method for u = mean(L)/n - rho/(2 n^2) var(L)
    var_u = (
        m2 / n**2 - (rho / n**3) * m3 + (rho**2 / (4.0 * n**4)) * (m4 - m2 * m2)
    ) / n_samples
    stderr = math.sqrt(max(var_u, 0.0))
    return value, stderr


def betting_logvar_second_derivative(p: float, k2: float) -> float:
    """Curvature of the log-variance for the +/- one-half betting model.

    Closed form 16 p (1-p) (2 + k2 log((2+k2)/(2-k2))) / (k2^2 - 4)^2,
    valid for 0 < p < 1 and 0 <= k2 < 2; nonnegative on that domain.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if not 0.0 <= k2 < 2.0:
        raise DomainError(f"k2 must lie in [0, 2), got {k2!r}")
    num = 16.0 * p * (1.0 - p) * (2.0 + k2 * math.log((2.0 + k2) / (2.0 - k2)))
    return num / (k2 * k2 - 4.0) ** 2


def continuous_log_variance(
    x_max: float, n: int, k2: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """Log-variance of the uniform model at risky weight ``k2`` (quadrature).

    Accepts any ``k2`` keeping the growth 1 + k2 * x positive over the
    compound support, including slightly negative probe values used by
    finite-difference curvature checks.
    """
    ev = ContinuousEvaluator(x_max, RiskSpec(rho=0.0, n=int(n)), quad)
    upper = ev._bound - 1.0
    if k2 > 1.0 or 1.0 + k2 * upper <= 0.0:
        raise DomainError(f"growth is not positive over the support for k2={k2!r}")
    e_log, e_log2 = ev.log_moments(np.array([1.0 - k2, k2]))
    return max(e_log2 - e_log * e_log, 0.0)


def continuous_logvar_second_derivative(
    x_max: float, n: int, k2: float, quad: Optional[QuadratureConfig] = None
) -> float:
    """Second difference (step 1e-4) of the uniform-model log-variance.

    Uses a central stencil when the left probe point keeps the growth
    positive over the whole compound support, otherwise a forward stencil.
    """
    if not 0.0 <= k2 < 1.0:
        raise DomainError(f"k2 must lie in [0, 1), got {k2!r}")
    if not x_max > 0.0:
        raise DomainError(f"x_max must be > 0, got {x_max!r}")
    h = SECOND_DERIVATIVE_FD_STEP
    upper = (1.0 + x_max) ** n - 1.0

    def v(c: float) -> float:
        return continuous_log_variance(x_max, n, c, quad)

    if 1.0 + (k2 - h) * upper > 1e-9:
        return (v(k2 + h) - 2.0 * v(k2) + v(k2 - h)) / (h * h)
    return (v(k2 + 2.0 * h) - 2.0 * v(k2 + h) + v(k2)) / (h * h)
