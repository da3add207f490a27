import numpy as np
import pytest

from mcscache.scenario import TaskType, UserArrays

# (criterion, passed, detail) rows collected by the acceptance module.
ACCEPTANCE_RESULTS = []


def report(criterion: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS.append((criterion, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {criterion}: {detail}")


def make_users(sensing_rate, rate=None, power=0.1, sensing_energy=1e-12, budget=np.inf, distance=100.0):
    """Column user arrays with scalar fields broadcast to the population size."""
    o = np.atleast_1d(np.asarray(sensing_rate, dtype=float))
    size = len(o)

    def col(x):
        return np.broadcast_to(np.asarray(x, dtype=float), (size,)).copy()

    return UserArrays(col(distance), col(power), o, col(sensing_energy), col(budget))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def task():
    return TaskType(1, 1e7)
