import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with (number, passed, seconds, note)."""
    log = request.config.stash.setdefault(_KEY, {})

    def record(number, passed, seconds, note=""):
        log[number] = (passed, seconds, note)
    return record


_KEY = pytest.StashKey[dict]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_KEY, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        passed, seconds, note = log[number]
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'} ({seconds:.1f} s)"
        terminalreporter.write_line(line + (f"  {note}" if note else ""))
