"""Shared pytest hooks: print one PASS/FAIL line per acceptance criterion."""

import re

_CRITERION = re.compile(r"test_criterion_(\d+)")
_results: dict = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call":
        _results[n] = report.passed and _results.get(n, True)
    elif report.failed:
        # setup or teardown errors count as a failed criterion
        _results[n] = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        CRITERIA = {}
    terminalreporter.write_line("")
    for n in sorted(_results):
        verdict = "PASS" if _results[n] else "FAIL"
        desc = CRITERIA.get(n, "")
        terminalreporter.write_line(f"ACCEPTANCE {n}: {verdict} - {desc}")
