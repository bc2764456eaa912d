import numpy as np
import pytest

from ristwoway.config import SystemConfig

# Lines recorded by the acceptance module, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    return SystemConfig(K=2, V=8, R=6, L_kk=4, L_kr=3, L_rk=3)


def naive_dft(x):
    """O(V^2) DFT along the last axis, [F]_{v,n} = exp(-2j pi v n / V)."""
    x = np.asarray(x, dtype=complex)
    V = x.shape[-1]
    n = np.arange(V)
    F = np.exp(-2j * np.pi * np.outer(n, n) / V)
    return x @ F.T
