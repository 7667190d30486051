"""Collect outcomes of ``@pytest.mark.criterion`` tests and print one verdict line per criterion."""
from collections import OrderedDict

import pytest

_results: "OrderedDict[int, dict]" = OrderedDict()


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            entry = _results.setdefault(num, {"title": title, "failed": [], "passed": 0})
            entry.setdefault("items", set()).add(item.nodeid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    entry = _results[mark.args[0]]
    if rep.passed:
        entry["passed"] += 1
    else:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    ran = {n: e for n, e in _results.items() if e["passed"] or e["failed"]}
    if not ran:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ran):
        e = ran[num]
        total = e["passed"] + len(e["failed"])
        status = "FAIL" if e["failed"] else "PASS"
        line = f"criterion {num} {status}: {e['title']} ({e['passed']}/{total} checks)"
        if e["failed"]:
            line += " failing: " + ", ".join(e["failed"])
        tr.write_line(line)
