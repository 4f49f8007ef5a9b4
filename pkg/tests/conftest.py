import sys

import numpy as np
import pytest

from slitdecoherence.kicks import KickLaw
from slitdecoherence.spectrum import C60, C70, EmissionSpectrum


@pytest.fixture
def rng():
    yield np.random.default_rng(8675309)


@pytest.fixture(scope="session")
def c70_2500():
    yield EmissionSpectrum.at(C70, 2500.0)


@pytest.fixture(scope="session")
def c70_law():
    yield KickLaw.at(C70, 2500.0)


@pytest.fixture(scope="session")
def c60():
    yield C60


@pytest.fixture(scope="session")
def c70():
    yield C70


def pytest_terminal_summary(terminalreporter):
    test_acceptance = sys.modules.get("test_acceptance")
    if test_acceptance is not None and test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[key])
