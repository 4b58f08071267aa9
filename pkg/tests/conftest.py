"""Shared fixtures. Expensive objects are computed once per session."""

import numpy as np
import pytest

from eigensets import ControlSet, PointCloud, barabanov_norm, example20_system, normalize, omega_limit

PUMP = [[[0.0, 1.0], [-4.0, 0.0]], [[0.0, 4.0], [-1.0, 0.0]]]
ROTATION = [[0.0, -1.0], [1.0, 0.0]]

# growth rate of the best two-switch periodic law of the pump pair,
# from oracles.pump_exponent (closed-form flows, grid search)
PUMP_SIGMA = 0.96780


@pytest.fixture(scope="session")
def pump():
    return ControlSet(PUMP)


@pytest.fixture(scope="session")
def pump_normed(pump):
    return normalize(pump, h=0.01, depth=8)


@pytest.fixture(scope="session")
def pump_norm(pump_normed):
    sys_n, _ = pump_normed
    return barabanov_norm(sys_n, h=0.01)


@pytest.fixture(scope="session")
def ex62():
    return example20_system(0.5)


@pytest.fixture(scope="session")
def ex62_eigensets(ex62):
    """omega_limit clouds from one seed on each kernel line, eps = 0.02."""
    out = {}
    for name, seed in (("r1", [0.5, 1.0]), ("r2", [-0.5, 1.0])):
        out[name] = omega_limit(PointCloud([seed], 0.02), ex62, h=0.01, return_info=True)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
