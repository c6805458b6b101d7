import importlib
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsalign import kernels
from nsalign.cloud import rng_from_seed

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_cloud(seed, n, d, scale=1.0):
    return scale * rng_from_seed(seed).standard_normal((n, d))


def random_orthogonal(seed, d):
    q, r = np.linalg.qr(rng_from_seed(seed).standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def basis_clouds():
    """Standard basis, its image under a linear map, and a stretched copy."""
    x = np.eye(3)
    y = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    x_a = x.copy()
    x_a[0, 0] = 2.0
    return x, y, x_a


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    if request.param == "compiled":
        try:
            mod = importlib.import_module("nsalign._core")
        except ImportError:
            pytest.skip("compiled extension not built")
    else:
        mod = importlib.import_module("nsalign._fallback")
    monkeypatch.setattr(kernels, "_impl", mod)
    return request.param
