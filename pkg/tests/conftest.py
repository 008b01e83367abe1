import re

_AC = re.compile(r"test_ac(\d+)_")
_results = {}


def pytest_runtest_logreport(report):
    m = _AC.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _results.setdefault(int(m.group(1)), []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        rows = _results[n]
        ok = all(outcome == "passed" for _, outcome in rows)
        failed = [name for name, outcome in rows if outcome != "passed"]
        tail = f" ({', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"AC{n}: {'PASS' if ok else 'FAIL'} [{len(rows)} checks]{tail}")
