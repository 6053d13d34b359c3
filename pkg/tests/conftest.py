import pytest

from kdtl.beamline import DeflectorConfig, VelocityDistribution
from kdtl.core import MoleculeSpec
from kdtl.fringe import GratingSet

ACCEPTANCE_LINES = []


@pytest.fixture
def gratings():
    return GratingSet()


@pytest.fixture
def isomer1():
    return MoleculeSpec("isomer1", 1592.0, 63.0, 63.0, 102.0)


@pytest.fixture
def isomer2():
    return MoleculeSpec("isomer2", 1592.0, 70.0, 70.0, 126.0)


@pytest.fixture
def vdist1():
    return VelocityDistribution("gaussian", 110.0, 0.15)


@pytest.fixture
def vdist2():
    return VelocityDistribution("gaussian", 91.0, 0.10)


@pytest.fixture
def deflector():
    return DeflectorConfig(1.0e4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
