"""Shared pytest plumbing: collects acceptance-criterion verdict lines.

test_acceptance.py records one PASS/FAIL line per criterion; the hook
below replays them in a dedicated section of the terminal summary so
they stay visible even though pytest captures per-test stdout.
"""

ACCEPTANCE_LINES: list[str] = []


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
