from __future__ import annotations

import pytest

from support import pure_population

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def population():
    """The shared generated population (1000 programs, depth 5, seed 0)."""
    return pure_population(1000, seed=0, depth=5)


@pytest.fixture
def report():
    def record(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
