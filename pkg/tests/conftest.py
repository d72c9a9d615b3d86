import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import adhesion1d as a

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def uniform_kernel():
    return a.make_kernel("uniform", 1.0)


@pytest.fixture(scope="session")
def tent_kernel():
    return a.make_kernel("tent", 1.0)


@pytest.fixture(scope="session")
def small_grid():
    """160 cells on [0, 5] with R = 1 (nu = 32)."""
    return a.build_grid(5.0, 32, 1.0)


@pytest.fixture(scope="session")
def domains():
    L, R = 5.0, 1.0
    return {
        "periodic": a.make_sampling_domain("periodic", L, R),
        "naive": a.make_sampling_domain("naive", L, R),
        "noflux": a.make_sampling_domain("noflux", L, R),
        "wall_interaction": a.make_sampling_domain(
            "wall_interaction", L, R, beta0=1.5, betaL=-0.7
        ),
    }


@pytest.fixture(scope="session")
def small_weights(small_grid, domains, uniform_kernel):
    return {
        kind: a.precompute_weights(small_grid, dom, uniform_kernel)
        for kind, dom in domains.items()
    }


def random_density(n, seed, mean=1.0, amp=0.5, non_negative=True):
    rng = np.random.Generator(np.random.Philox(seed))
    u = mean + amp * rng.standard_normal(n)
    return np.maximum(u, 0.0) if non_negative else u
