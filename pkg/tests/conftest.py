import numpy as np
import pytest

from funcsurvey.population import Grid, Population

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = ("PASS" if passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {status}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_pop(rng):
    """Twelve units, two covariates, a six-node grid."""
    grid = Grid(1.0, 6)
    X = rng.gamma(4.0, 2.0, size=12) + 0.5
    Z = np.column_stack([X + rng.normal(size=12), rng.normal(size=12)])
    Y = 3.0 + Z @ rng.normal(size=(2, 6)) + rng.normal(size=(12, 6))
    return Population(grid, Y, Z, X)


def make_pop(N, r=3, d=1, seed=0, X=None):
    g = np.random.default_rng(seed)
    X = g.uniform(1.0, 5.0, size=N) if X is None else np.asarray(X, dtype=float)
    Z = np.column_stack([X] + [g.normal(size=N) for _ in range(d - 1)])
    Y = g.normal(size=(N, r)) * 2 + X[:, None]
    return Population(Grid(1.0, r), Y, Z, X)
