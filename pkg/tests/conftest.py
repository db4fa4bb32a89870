"""Session-wide fixtures.

Suite generation renders forward kinematics for all 20 clips, so the suite is
built once and shared; tests must not mutate it (motion arrays are read-only).
"""
import numpy as np
import pytest

from physink import synthetic


@pytest.fixture(scope="session")
def model():
    return synthetic.test_humanoid()


@pytest.fixture(scope="session")
def corr(model):
    return synthetic.test_correspondence(model)


@pytest.fixture(scope="session")
def suite(model):
    return synthetic.generate_suite(model)


@pytest.fixture(scope="session")
def clips_by_name(suite):
    return {clip.name: clip for clip in suite}


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


#: verdict lines collected by the acceptance tests, one per criterion
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.line(line)
