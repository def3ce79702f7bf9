import pytest
from hypothesis import settings

from ibfd_dcf.params import BackoffParams, PhyMacParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES = []


@pytest.fixture
def phy():
    return PhyMacParams()


@pytest.fixture
def backoff(phy):
    return BackoffParams.from_phy(phy)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
