import math

import pytest

from pumpcorr import CrystalSetup, GridSpec, SpotConvention, gaussian_pump


@pytest.fixture(scope="session")
def setup():
    return CrystalSetup()


@pytest.fixture(scope="session")
def waist():
    return 100e-6


@pytest.fixture(scope="session")
def gauss_pump(waist):
    return gaussian_pump(waist, SpotConvention.FIELD_WAIST)


def closed_form_gaussian(beta, k, w):
    return math.exp(-(beta**2) / (2 * k**2 * w**2))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
