import numpy as np
import pytest

from pvsel.regcore import Dataset

ACCEPTANCE_LINES: list[str] = []


def random_dataset(rng, n, M, beta=None, sigma=1.0):
    X = rng.standard_normal((n, M))
    b = np.zeros(M) if beta is None else np.asarray(beta, dtype=float)
    y = X @ b + sigma * rng.standard_normal(n)
    return Dataset(X, y)


@pytest.fixture
def toy():
    """Y = (1, 2, 3, 4) with one all-ones column."""
    return Dataset(np.ones((4, 1)), np.array([1.0, 2.0, 3.0, 4.0]))


@pytest.fixture
def acceptance_report():
    def record(criterion: str, ok: bool, detail: str):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
