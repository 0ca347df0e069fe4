import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_circle_model(rng, n=10, h=0.3):
    from sphalpha.kde import KdeModel

    u = rng.uniform(0, 2 * np.pi, n)
    return KdeModel(np.stack([np.cos(u), np.sin(u)], 1), np.ones(n), 1.0 / h**2)


def random_model(rng, n, d, h=0.3, weights=False):
    from sphalpha.kde import KdeModel
    from sphalpha.sphere import random_sphere

    a = rng.uniform(0.5, 2.0, n) if weights else np.ones(n)
    return KdeModel(random_sphere(n, d, rng), a, 1.0 / h**2)


def support_points(m, k, rng):
    """k points of the sphere where the model density is positive."""
    from sphalpha.sampler import draw_mu

    return draw_mu(m, k, rng)
