import pytest

_RESULTS: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, label): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and rep.passed:
        return
    num, label = mark.args
    slot = _RESULTS.setdefault(num, [label, True, 0.0])
    slot[1] = slot[1] and rep.passed
    if rep.when == "call":
        slot[2] += rep.duration


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_RESULTS):
        label, ok, secs = _RESULTS[num]
        tr.write_line("%s  criterion %d: %s (%.2f s)" % ("PASS" if ok else "FAIL", num, label, secs))
