"""Pytest wiring: the acceptance log printed after the run summary."""

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Recorder for one pass/fail line per acceptance criterion.

    The line is printed immediately (visible under ``-s`` or on failure)
    and replayed in the terminal summary so a plain ``pytest -v`` run
    still shows every criterion verdict.
    """

    def record(name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
