import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from flowmetrics.families import random_corpus

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def corpus():
    """200 random connected graphs, n in [3, 10], weights log-uniform in [0.1, 10]."""
    return random_corpus(200, seed=20240601, nmin=3, nmax=10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
