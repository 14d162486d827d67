import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_addoption(parser):
    parser.addoption("--run-stretch", action="store_true", default=False,
                     help="run hours-long optional fits")
    parser.addoption("--run-slow", action="store_true", default=False,
                     help="run long-running reproduction jobs")


def pytest_collection_modifyitems(config, items):
    for item in items:
        if "stretch" in item.keywords and not config.getoption("--run-stretch"):
            item.add_marker(pytest.mark.skip(reason="stretch target; pass --run-stretch"))
        if "slow" in item.keywords and not config.getoption("--run-slow"):
            item.add_marker(pytest.mark.skip(reason="long-running job; pass --run-slow"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        label = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        detail = "; ".join(v for k, v in item.user_properties if k == "detail")
        if report.outcome == "skipped" and not detail and isinstance(report.longrepr, tuple):
            detail = report.longrepr[2]
        key = (mark.args[0], item.name)
        _CRITERIA[key] = (label, detail)


@pytest.fixture
def criterion(request):
    """Attach detail lines to the acceptance summary of the current test."""
    num = request.node.get_closest_marker("criterion").args[0]

    def detail(text: str):
        request.node.user_properties.append(("detail", text))
        print(f"criterion {num}: {text}")
    return detail


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name) in sorted(_CRITERIA):
        label, detail = _CRITERIA[(num, name)]
        terminalreporter.write_line(f"criterion {num:>2} {label}  {name}  {detail}")
