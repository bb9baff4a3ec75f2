import sys
from pathlib import Path

from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None)
settings.load_profile("default")

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and report.when == "call":
        _criteria[report.nodeid.split("::")[-1]] = "PASS" if report.passed else "FAIL"
    elif "test_acceptance.py::test_criterion_" in report.nodeid and report.failed:
        _criteria[report.nodeid.split("::")[-1]] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda s: int(s.split("_")[2])):
        terminalreporter.write_line(f"{_criteria[name]}  {name}")
