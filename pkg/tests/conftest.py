"""Prints one PASS/FAIL line per acceptance criterion at the end of the run.

Tests opt in with ``@pytest.mark.criterion(number, title)``.
"""

import pytest

_results = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        passed = report.passed and report.when == "call"
        prev = _results.get(number)
        if prev is not None:
            passed = passed and prev[1]
        _results[number] = (title, passed, report.duration + (prev[2] if prev else 0.0))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, passed, seconds = _results[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"{status}  criterion {number}: {title} ({seconds:.2f}s)")
