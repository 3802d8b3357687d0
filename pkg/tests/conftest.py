import numpy as np
import pytest

from riskalloc import (
    RiskSpec,
    build_discrete_compound,
    two_point_betting,
)


@pytest.fixture
def betting_model():
    return two_point_betting(0.6)


@pytest.fixture
def betting_dist(betting_model):
    return build_discrete_compound(betting_model, 1)


@pytest.fixture
def kelly_spec():
    return RiskSpec(rho=0.0, n=1)


def random_discrete_model(rng, n_atoms=None, m=None):
    """A random joint discrete model with payoffs in (-0.9, 1.5)."""
    from riskalloc import DiscreteJoint

    n_atoms = n_atoms or rng.integers(2, 5)
    m = m or rng.integers(1, 4)
    payoffs = rng.uniform(-0.9, 1.5, size=(n_atoms, m))
    probs = rng.dirichlet(np.ones(n_atoms))
    probs = probs / probs.sum()
    return DiscreteJoint(payoffs=payoffs, probs=probs)


def random_interior_allocation(rng, m, floor=0.05):
    """A random simplex point with every component at least ``floor``."""
    raw = rng.dirichlet(np.ones(m))
    adjusted = (raw + floor) / (1.0 + m * floor)
    return adjusted / adjusted.sum()


def ks_distance(samples, cdf):
    """Kolmogorov-Smirnov distance between an empirical sample and a CDF."""
    x = np.sort(np.asarray(samples))
    n = x.size
    f = cdf(x)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return max(upper, lower)
