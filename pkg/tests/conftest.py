import re
import sys
from collections import OrderedDict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_AC = re.compile(r"test_acceptance\.py::test_ac(\d\d)_")
_outcomes: "OrderedDict[str, list[bool]]" = OrderedDict()
_titles: dict[str, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = _AC.search(item.nodeid)
        if m:
            _outcomes.setdefault(m.group(1), [])
            _titles.update(getattr(item.module, "CRITERIA", {}))


def pytest_runtest_logreport(report):
    m = _AC.search(report.nodeid)
    if not m:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        _outcomes.setdefault(m.group(1), []).append(not failed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_outcomes):
        results = _outcomes[num]
        status = "NOT RUN" if not results else "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"AC{num} {status}  {_titles.get(num, '')}")
