import pytest

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    label = marker.args[0]
    status = "PASS" if report.passed else "FAIL"
    detail = dict(report.user_properties).get("detail", "")
    if label not in _CRITERIA or status == "FAIL":
        _CRITERIA[label] = (status, detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test implements")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split()[0])):
        status, detail = _CRITERIA[label]
        terminalreporter.write_line(f"[{status}] {label}" + (f"  ({detail})" if detail else ""))
