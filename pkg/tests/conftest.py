import pytest

from oracles import gap_instance_for

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    num, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed and not detail:
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else ""
    _criteria[num] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status, detail = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {title}  [{detail}]")


@pytest.fixture
def detail(record_property):
    """Attach a one-line summary to the acceptance report."""
    return lambda text: record_property("detail", text)


@pytest.fixture
def gap_instance():
    """Three products where the randomized optimum beats every deterministic one (M=2)."""
    return gap_instance_for(2)
