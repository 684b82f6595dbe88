import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            item.user_properties.append(("criterion", m.args))


def pytest_runtest_logreport(report):
    args = dict(report.user_properties).get("criterion")
    if args is None:
        return
    num, title = args
    entry = _results.setdefault(num, {"title": title, "ok": True})
    if report.outcome != "passed":
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        entry = _results[num]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status} {entry['title']}")
