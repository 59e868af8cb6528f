from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from shvesicle.quadrature import build_grid

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid20():
    return build_grid(20)


@pytest.fixture(scope="session")
def grid24():
    return build_grid(24)
