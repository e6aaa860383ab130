"""Session wiring: replay the acceptance-criteria lines after the run.

test_acceptance.py appends one verdict line per criterion to a scratch
file as it goes; plain pytest hides stdout of passing tests, so the
summary hook below re-prints the collected lines at the end.
"""

import os

_LINES = os.path.join(os.path.dirname(__file__), ".acceptance_lines")


def pytest_sessionstart(session):
    if os.path.exists(_LINES):
        os.remove(_LINES)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not os.path.exists(_LINES):
        return
    with open(_LINES) as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for ln in lines:
        terminalreporter.write_line(ln)
