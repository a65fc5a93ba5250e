import pytest

from superarc.ctm import enumerate_machines, load_table
from superarc.metrics import BdmConfig


@pytest.fixture(scope="session")
def table2():
    return enumerate_machines(2)


@pytest.fixture(scope="session")
def table2_programs():
    return enumerate_machines(2, retain_programs=True)


@pytest.fixture(scope="session")
def table3():
    return load_table(3)


@pytest.fixture(scope="session")
def table4():
    return load_table(4)


@pytest.fixture(scope="session")
def cfg3(table3):
    return BdmConfig(table3)


@pytest.fixture(scope="session")
def cfg4(table4):
    return BdmConfig(table4)


@pytest.fixture(scope="session")
def predictor_cfg(cfg4):
    # the next-bit baseline runs on the largest shipped table at its default block size
    return cfg4


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
