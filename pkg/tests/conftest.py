import numpy as np
import pytest

from flowgame.density import kde_fit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def bimodal_dy():
    """Tabulated IPD density with a sharp mode and a broad idle component."""
    r = np.random.default_rng(7)
    s = np.concatenate([0.1 * np.exp(0.1 * r.standard_normal(3000)),
                        0.5 * np.exp(r.standard_normal(1000))])
    return kde_fit(s, 0.005).tabulate()


@pytest.fixture(scope="session")
def jitter_dd():
    r = np.random.default_rng(8)
    return kde_fit(0.01 * r.standard_normal(3000)).tabulate()


class TableDensity:
    """Piecewise-constant log-density on integer-indexed bins, for DP oracles."""

    def __init__(self, edges, logs):
        self.edges = np.asarray(edges, dtype=float)
        self.logs = np.asarray(logs, dtype=float)

    def logpdf(self, x):
        i = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.logs.size - 1)
        return self.logs[i]


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
