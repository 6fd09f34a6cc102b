import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_lambdas(rng, n, exclude=(0.0, 1.0, 16.0, -4.0), radius=1e-6):
    out = []
    while len(out) < n:
        lam = complex(rng.uniform(-50, 80), rng.uniform(-65, 65))
        if all(abs(lam - e) > radius for e in exclude):
            out.append(lam)
    return out
