import numpy as np
import pytest

from prowl.data import Dataset, FeatureKind
from prowl.simulate import ScenarioConfig, simulate


def random_dataset(rng, n=50, p=2, eps=0.1, kind=FeatureKind.LINEAR_INTERCEPT):
    x = rng.uniform(-1, 1, size=(n, p))
    a = rng.choice([-1, 1], size=n)
    r = rng.uniform(0, 1, size=n)
    u = rng.uniform(0, 0.5, size=n)
    pi = rng.uniform(eps, 1 - eps, size=n)
    return Dataset(x, a, r, u, pi, feature_kind=kind)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def s1_small():
    return simulate(ScenarioConfig(1, 200, 1.0, 3, n_test=2000))


@pytest.fixture(scope="session")
def s2_small():
    return simulate(ScenarioConfig(2, 200, 1.5, 4, n_test=2000))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
