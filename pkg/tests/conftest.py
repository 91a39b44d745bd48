import sys
from pathlib import Path

import pytest

# helpers such as oracle.py live next to the tests
sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "seen": False, "notes": []})
    if rep.when == "call" or rep.failed:
        entry["seen"] = True
        entry["ok"] &= rep.passed
    for key, value in item.user_properties:
        if key == "record" and rep.when == "call":
            entry["notes"].append(value)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["ok"] and entry["seen"] else "FAIL"
        tr.write_line(f"criterion {number:>2}: {status}  {entry['title']}")
        for note in entry["notes"]:
            tr.write_line(f"               {note}")
