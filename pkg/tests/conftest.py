"""Shared test plumbing: the acceptance-criterion result banner.

Acceptance tests register one line per criterion through record_criterion;
the lines are replayed in the terminal summary so they are visible even
when pytest captures stdout.
"""

_CRITERIA = []


def record_criterion(number: int, description: str, ok: bool) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {description}"
    _CRITERIA.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
