"""Shared pytest plumbing: acceptance verdict lines in the final summary."""

import pytest

_verdicts = []


@pytest.fixture
def criterion_verdict():
    """Record one pass/fail line per acceptance criterion.

    The line is printed immediately (visible under -s or on failure) and
    repeated in the terminal summary so a plain ``pytest -v`` run always
    shows every criterion outcome.
    """
    def _record(number: int, ok: bool, note: str = "") -> bool:
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}"
        if note:
            line += f"  ({note})"
        print(line)
        _verdicts.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _verdicts:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in _verdicts:
        terminalreporter.write_line(line)
