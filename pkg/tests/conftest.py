import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    number, name = int(m.group(1)), m.group(2).replace("_", " ")
    if report.failed:
        _results[number] = (name, "FAIL")
    elif report.when == "call" and number not in _results:
        _results[number] = (name, "PASS" if report.passed else "SKIP")


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        name, outcome = _results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {outcome}  {name}")
