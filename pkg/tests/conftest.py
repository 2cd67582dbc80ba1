import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# criterion id -> (title, passed, detail), filled in by test_acceptance
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(CRITERIA, key=lambda c: (int(c.rstrip("abc")), c)):
        title, passed, detail = CRITERIA[cid]
        terminalreporter.write_line(f"criterion {cid} {'PASS' if passed else 'FAIL'}: {title}: {detail}")
