import numpy as np
import pytest

from discsbl import FiniteAlphabet, make_instance, unit_circle_alphabet


def small_instance(seed, N=12, delta=0.6, L=4, snr_db=15.0, kind="iid-gaussian"):
    rng = np.random.default_rng(seed)
    alphabet = unit_circle_alphabet(L, "random-simplex", rng)
    return make_instance(alphabet, N, delta, kind, snr_db, rng)


@pytest.fixture
def bpsk():
    return FiniteAlphabet([1, -1], [0.5, 0.5])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
