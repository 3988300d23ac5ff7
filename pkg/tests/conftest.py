import numpy as np
import pytest

from sblgamp import TrialSpec, make_instance

# lines printed by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_REPORT = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def noiseless_small():
    return make_instance(TrialSpec(n=50, m=25, k=3, seed=11))


@pytest.fixture
def noisy_small():
    return make_instance(TrialSpec(n=60, m=30, k=4, snr_db=25.0, seed=3))
