import pytest
from hypothesis import HealthCheck, settings

from bowenhit.systems import SystemDescriptor

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fair():
    return SystemDescriptor.bernoulli((0.5, 0.5))


@pytest.fixture(scope="session")
def markov():
    return SystemDescriptor.markov([[0.9, 0.1], [0.2, 0.8]])


@pytest.fixture(scope="session")
def doubling():
    return SystemDescriptor.doubling()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
