import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mucorr.sieve import build_table  # noqa: E402


@pytest.fixture(scope="session")
def small_table():
    """[1, 20001): enough for every brute-force comparison."""
    return build_table(1, 20_001)


@pytest.fixture(scope="session")
def table_1e5():
    return build_table(1, 100_100)


@pytest.fixture(scope="session")
def table_1e6():
    return build_table(1, 1_000_100)


# PASS/FAIL lines from test_acceptance, echoed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
