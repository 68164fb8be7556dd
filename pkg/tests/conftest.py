import numpy as np
import pytest

from cavsqueeze import analyze_point

# acceptance criterion id -> (title, outcome); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def small_analysis():
    """mu = delta1 = 1.2 on a coarse grid shared by the unit tests."""
    return analyze_point(1.2, 1.2, n_points=256, length=32.0)


@pytest.fixture(scope="session")
def mu1_analysis():
    return analyze_point(1.0, 1.2, n_points=256, length=32.0)


@pytest.fixture
def omega():
    return np.linspace(0.0, 10.0, 101)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    ACCEPTANCE[number] = (title, passed)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config.addinivalue_line("markers", "slow: long-running stochastic runs")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title}")
