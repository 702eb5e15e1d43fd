"""Per-criterion pass/fail summary for the acceptance suite."""

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    entry = _RESULTS.setdefault(number, {"title": title, "status": "PASS", "notes": []})
    if rep.failed:
        entry["status"] = "FAIL"
    elif rep.skipped and entry["status"] == "PASS":
        entry["status"] = "SKIP"
    entry["notes"].extend(getattr(item, "criterion_notes", []))


@pytest.fixture
def note(request):
    """Attach a measured value to the criterion summary line."""
    request.node.criterion_notes = []
    return request.node.criterion_notes.append


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        detail = "; ".join(e["notes"])
        terminalreporter.write_line(
            f"criterion {number:2d} {e['status']:4s}  {e['title']}" + (f"  [{detail}]" if detail else "")
        )
