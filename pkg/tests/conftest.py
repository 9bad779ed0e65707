import pytest

from qvmpool.benchmarks import load_benchmarks
from qvmpool.calibration import KINGSTON, build_graph, generate_heavy_hex
from qvmpool.config import Config
from qvmpool.regions import discover


@pytest.fixture(scope="session")
def kingston_snap():
    return generate_heavy_hex(7, 3, KINGSTON)


@pytest.fixture(scope="session")
def kingston_graph(kingston_snap):
    return build_graph(kingston_snap)


@pytest.fixture(scope="session")
def kingston_pool(kingston_graph):
    return discover(kingston_graph, 0, Config())


@pytest.fixture(scope="session")
def workload():
    return load_benchmarks()


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(acceptance_log.LINES):
            terminalreporter.write_line(acceptance_log.LINES[k])
