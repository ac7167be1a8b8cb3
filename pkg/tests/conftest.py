import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> [title, status, details]; a criterion may span several
# tests, and any failing part fails it
_criteria = {}
_RANK = {"SKIP": 0, "PASS": 1, "FAIL": 2}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call":
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.skipped:
        status = "SKIP"
    elif report.failed:
        status = "FAIL"
    else:
        return
    detail = dict(item.user_properties).get("detail", "")
    if status == "SKIP" and isinstance(report.longrepr, tuple):
        detail = report.longrepr[2].removeprefix("Skipped: ")
    number, title = marker.args
    entry = _criteria.setdefault(number, [title, "SKIP", []])
    if _RANK[status] > _RANK[entry[1]]:
        entry[1] = status
    if detail:
        entry[2].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, status, details = _criteria[number]
        line = f"criterion {number} [{status}] {title}"
        terminalreporter.write_line(line + (": " + "; ".join(details) if details else ""))
