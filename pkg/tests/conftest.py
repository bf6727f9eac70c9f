"""Shared test plumbing: the acceptance-criteria recorder.

Acceptance tests register one verdict per criterion through the
``acceptance`` fixture; the hook below echoes a PASS/FAIL line for each
recorded criterion in the terminal summary so the verdicts are visible
even when per-test output capture is on.
"""

import pytest

_ACCEPTANCE_RESULTS = []


@pytest.fixture()
def acceptance():
    def record(number, label, ok):
        ok = bool(ok)
        _ACCEPTANCE_RESULTS.append((number, label, ok))
        verdict = "PASS" if ok else "FAIL"
        print(f"ACCEPTANCE {number}: {label}: {verdict}")
        assert ok, f"acceptance criterion {number} ({label}) failed"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, ok in sorted(_ACCEPTANCE_RESULTS):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {number}: {label}: {verdict}")
