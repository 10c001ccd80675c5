import pytest

_results: list[tuple[int, str, str, float]] = []
_setup: dict[str, float] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "setup":
        # module fixtures do the heavy lifting for some criteria
        _setup[item.nodeid] = rep.duration
    elif rep.when == "call":
        number, title = mark.args
        secs = rep.duration + _setup.get(item.nodeid, 0.0)
        _results.append((number, title, "PASS" if rep.passed else "FAIL", secs))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, verdict, secs in sorted(_results):
        terminalreporter.write_line(f"criterion {number}: {verdict}  {title}  ({secs:.2f} s)")
