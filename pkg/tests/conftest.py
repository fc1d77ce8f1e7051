import numpy as np
import pytest

from mlrisk.ingest import make_panel
from mlrisk.synth import synth_returns


def assert_correlation(psi, tol=1e-10):
    """Unit diagonal and unit mean eigenvalue."""
    psi = np.asarray(psi)
    assert np.max(np.abs(np.diag(psi) - 1.0)) <= tol
    assert abs(np.linalg.eigvalsh(psi).mean() - 1.0) <= tol


@pytest.fixture
def rng():
    return np.random.default_rng(20190101)


@pytest.fixture(scope="session")
def small_panel():
    tickers, r, _ = synth_returns(40, 12, 4, seed=11)
    return make_panel(r, tickers)


@pytest.fixture(scope="session")
def medium_panel():
    tickers, r, _ = synth_returns(100, 21, 8, seed=5)
    return make_panel(r, tickers)


_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line and fail the test if the check failed."""

    def record(number, name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE_LINES.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
