import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


def binomial_band(n, p, level=0.99):
    """Two-sided ``level`` acceptance interval for a rejection *rate*."""
    lo, hi = stats.binom.interval(level, n, p)
    return lo / n, hi / n


def within_se(estimate, target, se, k=4.0):
    return abs(estimate - target) <= k * se


def mean_se(x, axis=0):
    x = np.asarray(x, dtype=float)
    return x.mean(axis=axis), x.std(axis=axis, ddof=1) / np.sqrt(x.shape[axis])


ACCEPTANCE = {}


def record(number, passed, summary):
    """Store one acceptance line; printed again in the terminal summary."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {summary}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
