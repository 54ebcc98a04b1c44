"""Shared test plumbing.

The acceptance tests report one summary line per criterion; collecting them
here and echoing them after the run keeps them visible even though pytest
captures stdout of passing tests.
"""

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_record():
    """Record and print one ``ACCEPTANCE <n> PASS/FAIL: ...`` line."""

    def record(criterion, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {criterion} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
