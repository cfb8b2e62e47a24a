import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from madelung_lab.fields import PhysParams, gaussian_state, make_grid

settings.register_profile("lab", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture
def params():
    return PhysParams()


@pytest.fixture
def grid20():
    return make_grid(1, [256], [20.0])


@pytest.fixture
def wide_grid():
    """Box used by the evolution scenarios: wide enough that sigma^2 = 8 packets never see the seam."""
    return make_grid(1, [256], [40.0])


@pytest.fixture
def grid14():
    """sigma = 1 Gaussians keep their tails above the node threshold on this box."""
    return make_grid(1, [256], [14.0])


@pytest.fixture
def unit_gaussian(grid14):
    return gaussian_state(grid14, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per criterion; printed now and again in the terminal summary."""

    def record(number: int, title: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
