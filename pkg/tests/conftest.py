import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from onesided.games import load_builtin  # noqa: E402
from onesided.simplex import make_grid  # noqa: E402
from onesided.solver import TimeGrid, solve_backward  # noqa: E402

# criterion number -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def _solve(name, n, m, **params):
    spec = load_builtin(name, params)
    return solve_backward(spec, TimeGrid(0.0, spec.horizon, n), make_grid(spec.dim, m))


@pytest.fixture(scope="session")
def reveal_table():
    return _solve("reveal", 200, 400)


@pytest.fixture(scope="session")
def ex1_table():
    return _solve("ex1", 400, 400)


@pytest.fixture(scope="session")
def cex_table():
    return _solve("counterexample", 400, 400)


@pytest.fixture(scope="session")
def aut3_table():
    return _solve("autonomous3", 50, 30)


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
