import numpy as np
import pytest

from anisolab import make_divfree_ic, make_grid


@pytest.fixture(scope="session")
def small_grid():
    """Coarse grid shared by most unit tests."""
    return make_grid(L=16.0, N=32, Z=8.0, M=65)


@pytest.fixture(scope="session")
def tiny_grid():
    return make_grid(L=4 * np.pi, N=16, Z=6.0, M=49)


@pytest.fixture(scope="session")
def divfree_u(small_grid):
    return make_divfree_ic(small_grid, seed=4, amplitude=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by tests/test_acceptance.py
CRITERIA: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
