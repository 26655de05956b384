import numpy as np
import pytest

from painleve_rogue.spectral import Distribution, RandomEnsembleConfig

ACCEPTANCE_LINES = []


def record_criterion(number: int, ok: bool, detail: str):
    """Store a pass/fail line; the terminal summary prints them all."""
    ACCEPTANCE_LINES.append((number, "PASS" if ok else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fig1_laws():
    return Distribution.parse("chi2:4"), Distribution.parse("gauss:0:15")


@pytest.fixture
def piii_config(fig1_laws):
    mu, v = fig1_laws
    return RandomEnsembleConfig("PIII", 8, mu, v, realizations=5, seed=3)


@pytest.fixture
def pv_config(fig1_laws):
    mu, v = fig1_laws
    return RandomEnsembleConfig("PV", 8, mu, v, realizations=5, seed=3, zeta=0.3)
