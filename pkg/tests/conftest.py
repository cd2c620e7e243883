import numpy as np
import pytest
from scipy import stats

from fskmc import ArrheniusModel, ArrheniusParams, Configuration, Lattice, SpinSpace


@pytest.fixture
def ring6():
    return Lattice((6,))


@pytest.fixture
def arrhenius():
    return ArrheniusModel(ArrheniusParams(c_a=1.0, c_d=1.0, beta=1.0, K=1.0, h=0.0))


def empty(lattice, states=2):
    return Configuration(lattice, SpinSpace(states))


def multinomial_ok(counts, probs, alpha=1e-4, min_expected=5.0):
    """Chi-square goodness of fit, pooling states whose expected count is below ``min_expected``.

    Counts in states of (numerically) zero probability fail outright.
    """
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.clip(np.asarray(probs, dtype=np.float64), 0.0, None)
    probs = probs / probs.sum()
    n = counts.sum()
    if np.any(counts[probs < 1e-12] > 0):
        return False
    big = n * probs >= min_expected
    obs = np.append(counts[big], counts[~big].sum())
    exp = np.append(n * probs[big], n * probs[~big].sum())
    if exp[-1] < min_expected:
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs, exp = obs[:-1], exp[:-1]
    return stats.chisquare(obs, exp).pvalue > alpha


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; lines are echoed in the terminal summary."""

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
