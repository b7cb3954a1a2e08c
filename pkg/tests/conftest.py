import numpy as np
import pytest

ACCEPTANCE_LINES = []


def dense_idft(n, oversampling=4):
    """Explicit ``M x N`` synthesis matrix ``A[m, n] = exp(j 2 pi m n / M)``."""
    m = n * oversampling
    return np.exp(2j * np.pi * np.outer(np.arange(m), np.arange(n)) / m)


def random_unimodular(rng, size):
    return np.exp(1j * rng.uniform(-np.pi, np.pi, size))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
