import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fjmask import FjSystem, Network, example1_system, random_fj_system, random_regular_network

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

EXAMPLE1_TABLE = np.array([
    [1.6, 1.52, 1.5, 1.4916, 1.48676],
    [2.2, 2.1, 2.082, 2.071, 2.0651],
    [2.4, 2.4, 2.376, 2.3628, 2.35632],
])
EXAMPLE1_W = np.array([[0.0, 0.5, 0.5], [0.2, 0.2, 0.6], [0.5, 0.0, 0.5]])
EXAMPLE1_LAM = np.array([0.4, 0.5, 0.6])


@pytest.fixture
def ex1() -> FjSystem:
    return example1_system()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_system(n, d, seed, lambda_lo=0.0, lambda_hi=1.0) -> FjSystem:
    net = random_regular_network(n, d, seed)
    return random_fj_system(net, lambda_lo, lambda_hi, seed + 1)


def cycle2() -> Network:
    return Network.from_lists([[1], [0]])


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
