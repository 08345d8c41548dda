import time

import pytest

from radcomp.constants import ComparisonConstants
from radcomp.model import DriftB, NonlinearityF, ProblemParams, RadialGrid

SUITE_BUDGET_S = 60.0
ACCEPTANCE_LINES = []
_START = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE_LINES.append((number, bool(ok), detail))


def pytest_sessionstart(session):
    _START["t"] = time.perf_counter()
    _START["session"] = session


def pytest_terminal_summary(terminalreporter):
    elapsed = time.perf_counter() - _START.get("t", time.perf_counter())
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda item: item[0]):
            if number == 9 and session_is_full():
                # the runtime half of criterion 9 is only known at the end
                ok = ok and elapsed < SUITE_BUDGET_S
                detail += f"; full suite {elapsed:.1f} s < {SUITE_BUDGET_S:.0f} s"
            terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    terminalreporter.write_line(
        f"suite wall time {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s): "
        f"{'PASS' if elapsed < SUITE_BUDGET_S else 'FAIL'}")


def session_is_full():
    session = _START.get("session")
    return session is not None and session.testscollected > 100


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _START.get("t", time.perf_counter())
    if session_is_full() and elapsed >= SUITE_BUDGET_S and exitstatus == 0:
        session.exitstatus = 1


@pytest.fixture
def params3():
    """p = 2, a = n - 2 = 1, the three-dimensional Laplacian case on [0, 1]."""
    return ProblemParams(p=2, a=1, k=1, sigma=4, n=3, R0=0.0, Rmax=1.0)


@pytest.fixture
def unit_consts():
    return ComparisonConstants(alpha=1.0, beta=0.5)


@pytest.fixture
def zero_f():
    return NonlinearityF.constant(0.0)


def uniform(params, n_nodes, drift=None):
    return RadialGrid.for_params(params, n_nodes, drift)
