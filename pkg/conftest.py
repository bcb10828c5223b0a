"""Shared curves and solver contexts for the test suite"""

import pytest
from mpmath import mp

from znkz import config as znkz_config
from znkz.curve import validate_curve
from znkz.kz import SolverContext

znkz_config.LOG_PROGRESS = False
znkz_config.LOG_CHARACTERISTICS = False
znkz_config.LOG_TIMINGS = False


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-minute numerical acceptance runs")


@pytest.fixture(scope="session")
def curve_n2m2():
    return validate_curve(2, 2, ["0", "1", "2", "3"], 128)


@pytest.fixture(scope="session")
def curve_n3m1():
    return validate_curve(3, 1, ["0", "1", ["2", "1"]], 128)


@pytest.fixture(scope="session")
def curve_n2m3():
    return validate_curve(2, 3, ["0", "1", "2", "3", "4", "5"], 128)


@pytest.fixture(scope="session")
def context_n2m2(curve_n2m2):
    with mp.workprec(curve_n2m2.precision_bits):
        return SolverContext.build(curve_n2m2, workers=2)


@pytest.fixture(scope="session")
def context_n3m1(curve_n3m1):
    with mp.workprec(curve_n3m1.precision_bits):
        return SolverContext.build(curve_n3m1, workers=2)
