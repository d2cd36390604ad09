import json
from pathlib import Path

import pytest

from papb.cli import resolve_data_path
from papb.cluster import load_descriptor

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

_criteria = {}


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def hdp4():
    return load_descriptor(resolve_data_path("builtin:azure-hdp-4"))


@pytest.fixture
def hdp8():
    return load_descriptor(resolve_data_path("builtin:azure-hdp-8"))


@pytest.fixture
def write_json(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path
    return write


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.failed):
        _criteria[number] = (title, report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed = _criteria[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}")
