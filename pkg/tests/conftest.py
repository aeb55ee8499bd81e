"""Collects per-criterion outcomes of the acceptance tests and prints a summary."""

import re

_PATTERN = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")
_OUTCOMES: dict[int, bool] = {}


def pytest_runtest_logreport(report):
    m = _PATTERN.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome == "failed":
        key = int(m.group(1))
        _OUTCOMES[key] = _OUTCOMES.get(key, True) and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_OUTCOMES):
        terminalreporter.write_line(f"CRITERION {key} {'PASS' if _OUTCOMES[key] else 'FAIL'}")
