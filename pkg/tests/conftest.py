import pytest

from voltstab import kernels
from voltstab.loadmodel import preset
from voltstab.network import NetworkParams


@pytest.fixture
def net():
    return NetworkParams(v1_mag=1.0, x_line=0.4)


@pytest.fixture(params=["aircon", "resistive", "inductive_095", "constant_power_unity"])
def any_load(request):
    return preset(request.param)


@pytest.fixture(params=kernels.available())
def backend(request):
    previous = kernels.use(request.param)
    yield request.param
    kernels.use(previous)


_criteria = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _criteria.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _criteria:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
