"""Per-criterion PASS/FAIL summary for tests marked ``criterion(n, title)``."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker
        entry = _OUTCOMES.setdefault(number, {"title": title, "passed": 0, "failed": [], "notes": []})
        if hasattr(report, "wasxfail"):
            entry["failed"].append(report.nodeid.split("::")[-1])
            entry["notes"].append(report.wasxfail)
        elif report.outcome == "passed":
            entry["passed"] += 1
        else:
            entry["failed"].append(report.nodeid.split("::")[-1])




@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result()._criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        e = _OUTCOMES[number]
        total = e["passed"] + len(e["failed"])
        status = "PASS" if not e["failed"] else "FAIL"
        line = f"criterion {number} [{e['title']}]: {status} ({e['passed']}/{total} checks)"
        if e["notes"]:
            line += " - " + "; ".join(e["notes"])
        elif e["failed"]:
            line += " - failing: " + ", ".join(e["failed"])
        terminalreporter.write_line(line)
