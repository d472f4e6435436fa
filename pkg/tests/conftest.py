import numpy as np
import pytest


@pytest.fixture
def rng(request):
    # per-test stream, stable across runs and test ordering
    return np.random.default_rng(_seed(request.node.nodeid))


def _seed(nodeid: str) -> int:
    return sum((i + 1) * ord(c) for i, c in enumerate(nodeid)) % 2**32


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
