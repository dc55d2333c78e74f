import sys
import random

import pytest

from wfcomplex.complexes import domains, get_split


@pytest.fixture(scope="session")
def disphenoid():
    return get_split("disphenoid")


@pytest.fixture(scope="session")
def tet_dom():
    return domains("disphenoid", "tet")


@pytest.fixture(scope="session")
def face_dom():
    return domains("disphenoid", "face")


@pytest.fixture
def rng():
    return random.Random(20240917)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.result_lines():
        terminalreporter.write_line(line)
