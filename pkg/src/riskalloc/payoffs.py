"""Per-stage payoff models and their n-stage compound return distributions.

A model describes the joint distribution of the per-stage payoffs of m
alternatives.  Compounding over n i.i.d. stages turns per-stage gross
returns (1 + payoff) into the product random vector whose component i is
the accumulated growth of alternative i.  For discrete models the compound
distribution is enumerated exactly; for the uniform model it has a closed
form driven by a gamma-shaped transform of the stage payoffs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.random import PCG64, Generator

from . import _kernels
from .errors import CapExceeded, DomainError, ValidationError

ATOM_PROB_SUM_TOL = 1e-12
COMPOUND_PROB_SUM_TOL = 1e-10
ATOM_MERGE_REL_TOL = 1e-12
DEFAULT_ATOM_CAP = 100_000


@dataclass(frozen=True)
class DiscreteJoint:
    """Joint discrete per-stage payoffs: atom j pays ``payoffs[j]`` w.p. ``probs[j]``.

    Every payoff component must exceed -1 so that compound returns stay
    strictly positive; probabilities must sum to one.
    """

    payoffs: np.ndarray
    probs: np.ndarray

    kind = "discrete"

    def __post_init__(self):
        payoffs = np.atleast_2d(np.asarray(self.payoffs, dtype=float))
        probs = np.asarray(self.probs, dtype=float).ravel()
        if payoffs.shape[0] != probs.shape[0]:
            raise ValidationError(
                f"got {payoffs.shape[0]} payoff atoms but {probs.shape[0]} probabilities"
            )
        if payoffs.shape[0] == 0:
            raise ValidationError("a discrete model needs at least one atom")
        if np.any(payoffs <= -1.0):
            raise ValidationError("every payoff must be > -1 (gross return must stay positive)")
        if np.any(probs <= 0.0) or np.any(probs > 1.0):
            raise ValidationError("atom probabilities must lie in (0, 1]")
        if abs(float(probs.sum()) - 1.0) > ATOM_PROB_SUM_TOL:
            raise ValidationError(
                f"atom probabilities sum to {probs.sum()!r}, expected 1 within {ATOM_PROB_SUM_TOL}"
            )
        payoffs.setflags(write=False)
        probs.setflags(write=False)
        # inclusive CDF for inverse-transform sampling; pin the last edge to 1
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        cdf.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def m(self) -> int:
        return self.payoffs.shape[1]


@dataclass(frozen=True)
class ContinuousUniform:
    """Two alternatives: a zero-rate sure one and one uniform on (-1, x_max]."""

    x_max: float

    kind = "uniform"
    m = 2

    def __post_init__(self):
        if not self.x_max > 0.0:
            raise ValidationError(f"x_max must be > 0, got {self.x_max!r}")
        object.__setattr__(self, "x_max", float(self.x_max))


@dataclass(frozen=True)
class Deterministic:
    """A single sure alternative paying ``rate`` every stage."""

    rate: float

    kind = "deterministic"
    m = 1

    def __post_init__(self):
        if not self.rate >= 0.0:
            raise ValidationError(f"rate must be >= 0, got {self.rate!r}")
        object.__setattr__(self, "rate", float(self.rate))


PayoffModel = Union[DiscreteJoint, ContinuousUniform, Deterministic]


def two_point_betting(p: float, win: float = 0.5, lose: float = -0.5) -> DiscreteJoint:
    """Sure zero-rate alternative plus a bet paying ``win`` w.p. p, ``lose`` otherwise."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    return DiscreteJoint(
        payoffs=np.array([[0.0, win], [0.0, lose]]),
        probs=np.array([p, 1.0 - p]),
    )


@dataclass(frozen=True)
class CompoundReturnDistribution:
    """Finite distribution of the n-stage compound gross return vector."""

    returns: np.ndarray
    probs: np.ndarray
    n: int

    def __post_init__(self):
        returns = np.atleast_2d(np.asarray(self.returns, dtype=float))
        probs = np.asarray(self.probs, dtype=float).ravel()
        if returns.shape[0] != probs.shape[0]:
            raise ValidationError("returns and probs must have matching lengths")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        if np.any(returns <= 0.0):
            raise ValidationError("every compound return component must be > 0")
        if np.any(probs <= 0.0) or np.any(probs > 1.0):
            raise ValidationError("probabilities must lie in (0, 1]")
        if abs(float(probs.sum()) - 1.0) > COMPOUND_PROB_SUM_TOL:
            raise ValidationError(
                f"probabilities sum to {probs.sum()!r}, expected 1 within {COMPOUND_PROB_SUM_TOL}"
            )
        returns = np.ascontiguousarray(returns)
        returns.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "n", int(self.n))

    @property
    def m(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class ErlangCompoundDensity:
    """Distribution of the net compound return of n uniform(-1, x_max] stages.

    The gross compound return is a product of n independent uniforms on
    (0, 1 + x_max], so its negative log (relative to the upper bound) is a
    sum of n unit exponentials.  The net return lives on the open interval
    (-1, (1 + x_max)^n - 1).
    """

    n: int
    x_max: float

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        if not self.x_max > 0.0:
            raise ValidationError(f"x_max must be > 0, got {self.x_max!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def gross_bound(self) -> float:
        """Upper bound (1 + x_max)^n of the gross compound return."""
        return (1.0 + self.x_max) ** self.n

    @property
    def support(self) -> tuple[float, float]:
        return (-1.0, self.gross_bound - 1.0)


def _compositions(total: int, parts: int):
    """Yield all nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _merge_close_atoms(returns: np.ndarray, probs: np.ndarray):
    """Merge atoms whose return vectors agree within ATOM_MERGE_REL_TOL."""
    order = np.lexsort(returns.T[::-1])
    returns = returns[order]
    probs = probs[order]
    keep_r = [returns[0]]
    keep_p = [probs[0]]
    for row, prob in zip(returns[1:], probs[1:]):
        ref = keep_r[-1]
        scale = np.maximum(np.abs(ref), np.abs(row))
        if np.all(np.abs(row - ref) <= ATOM_MERGE_REL_TOL * np.maximum(scale, 1.0)):
            keep_p[-1] += prob
        else:
            keep_r.append(row)
            keep_p.append(prob)
    return np.array(keep_r), np.array(keep_p)


def build_discrete_compound(
    model: DiscreteJoint, n: int, atom_cap: int = DEFAULT_ATOM_CAP
) -> CompoundReturnDistribution:
    """Enumerate the exact n-stage compound return distribution.

    Stage order does not matter for products, so outcomes are enumerated as
    multisets: a count vector c over the A per-stage atoms has probability
    multinomial(n; c) * prod p_j^c_j and compound return component
    prod_j (1 + payoff_{j,i})^c_j.  Raises :class:`CapExceeded` when the
    multiset count C(n + A - 1, A - 1) exceeds ``atom_cap``; callers should
    then estimate by Monte Carlo instead.
    """
    if not isinstance(model, DiscreteJoint):
        raise ValidationError(f"expected a discrete model, got {type(model).__name__}")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n!r}")
    a = model.probs.shape[0]
    n_multisets = math.comb(n + a - 1, a - 1)
    if n_multisets > atom_cap:
        raise CapExceeded(
            f"{n_multisets} compound atoms exceed the cap of {atom_cap}; "
            "use Monte Carlo evaluation instead"
        )

    counts = np.array(list(_compositions(int(n), a)), dtype=np.int64)
    gross = 1.0 + model.payoffs  # (A, m)

    # exact multinomial coefficients (integers are small at desk scale)
    coeffs = np.array(
        [math.factorial(n) // math.prod(math.factorial(int(c)) for c in row) for row in counts],
        dtype=float,
    )
    probs = coeffs * np.prod(model.probs[None, :] ** counts, axis=1)
    returns = np.prod(gross.T[None, :, :] ** counts[:, None, :], axis=2)

    returns, probs = _merge_close_atoms(returns, probs)
    return CompoundReturnDistribution(returns=returns, probs=probs, n=int(n))


def erlang_compound_pdf(z, density: ErlangCompoundDensity):
    """Density of the net compound return at z; zero outside the support.

    On (-1, (1 + x_max)^n - 1) the density is
    (log(B / (1 + z)))^(n-1) / (B * (n-1)!) with B = (1 + x_max)^n.  For
    n >= 2 it diverges (integrably) as z -> -1.
    """
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    bound = density.gross_bound
    inside = (z_arr > -1.0) & (z_arr < bound - 1.0)
    safe = np.where(inside, z_arr, 0.0)
    t = np.log(bound / (1.0 + safe))
    out = np.where(
        inside, t ** (density.n - 1) / (bound * math.factorial(density.n - 1)), 0.0
    )
    return float(out[0]) if scalar else out


def erlang_compound_cdf(z, density: ErlangCompoundDensity):
    """Distribution function of the net compound return at z.

    Inside the support it equals ((1 + z) / B) * sum_{k<n} t^k / k! with
    t = log(B / (1 + z)); it is 0 at or below -1 and 1 at or above the
    upper endpoint.
    """
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    bound = density.gross_bound
    inside = (z_arr > -1.0) & (z_arr < bound - 1.0)
    safe = np.where(inside, z_arr, 0.0)
    t = np.log(bound / (1.0 + safe))
    series = np.ones_like(t)
    term = np.ones_like(t)
    for k in range(1, density.n):
        term = term * t / k
        series += term
    val = (1.0 + safe) / bound * series
    out = np.where(z_arr <= -1.0, 0.0, np.where(inside, np.clip(val, 0.0, 1.0), 1.0))
    return float(out[0]) if scalar else out


def uniform_to_exponential(x, x_max: float):
    """Map a uniform(-1, x_max] payoff to a unit-mean exponential variate.

    y = -log((1 + x) / (1 + x_max)) is >= 0 on the domain and is
    exponentially distributed with rate 1 when x is uniform.
    """
    if not x_max > 0.0:
        raise DomainError(f"x_max must be > 0, got {x_max!r}")
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr <= -1.0) or np.any(x_arr > x_max):
        raise DomainError(f"x must lie in (-1, {x_max}]")
    out = np.log1p(x_max) - np.log1p(x_arr)
    return float(out[0]) if scalar else out


def _draws_per_sample(model: PayoffModel, n: int) -> int:
    return 0 if isinstance(model, Deterministic) else n


def sample_compound(
    model: PayoffModel, n: int, seed: int, count: int, offset: int = 0
) -> np.ndarray:
    """Draw i.i.d. compound return vectors; shape (count, m), all entries > 0.

    The stream is generated by a PCG64 generator keyed on ``seed``; sample
    j consumes the uniform draws [j*n, (j+1)*n), so partitioned calls
    compose exactly: drawing ``count = c1 + c2`` samples equals
    concatenating ``offset=0, count=c1`` with ``offset=c1, count=c2``.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count!r}")
    if offset < 0:
        raise DomainError(f"offset must be >= 0, got {offset!r}")

    if isinstance(model, Deterministic):
        return np.full((count, 1), (1.0 + model.rate) ** n)

    bitgen = PCG64(seed)
    if offset:
        bitgen.advance(offset * _draws_per_sample(model, n))
    uniforms = Generator(bitgen).random((count, n))

    if isinstance(model, DiscreteJoint):
        gross = np.ascontiguousarray(1.0 + model.payoffs)
        return _kernels.discrete_paths(uniforms, model._cdf, gross)
    if isinstance(model, ContinuousUniform):
        out = np.ones((count, 2))
        out[:, 1] = _kernels.uniform_paths(uniforms, 1.0 + model.x_max)
        return out
    raise ValidationError(f"unsupported model type {type(model).__name__}")
