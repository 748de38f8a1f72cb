import numpy as np
import pytest

from blockgibbs.model import DesignData

# filled by test_acceptance and echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def tiny():
    """n = 2, p = 1, X = (1, -1), Y = (1, -1)."""
    return DesignData.from_arrays(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))


@pytest.fixture
def twin_columns():
    """n = 2, p = 2 with identical columns (1, -1)."""
    X = np.array([[1.0, 1.0], [-1.0, -1.0]])
    return DesignData.from_arrays(X, np.array([1.0, -1.0]))
