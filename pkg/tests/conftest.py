import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from topodyn.core import FiniteMetricSystem

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_system(seed: int, n: int, dim: int = 2, name: str = "random") -> FiniteMetricSystem:
    """Random points in the plane under a random permutation."""
    rng = np.random.default_rng(seed)
    pts = rng.random((n, dim))
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2))
    return FiniteMetricSystem(d, rng.permutation(n), name=f"{name}-{seed}-{n}")


@st.composite
def systems(draw, max_states: int = 24):
    n = draw(st.integers(1, max_states))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_system(seed, n)


@st.composite
def system_and_subset(draw, max_states: int = 24):
    sys_ = draw(systems(max_states))
    subset = draw(st.sets(st.integers(0, sys_.n - 1), min_size=1))
    return sys_, frozenset(subset)


@pytest.fixture
def square():
    """Four corners of the unit square rotated by a quarter turn."""
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(axis=2))
    return FiniteMetricSystem(d, [1, 2, 3, 0], ["a", "b", "c", "d"], name="square")
