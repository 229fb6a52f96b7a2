from importlib import resources

import pytest

from mixtest.litmus import load_test
from mixtest.profiles import bundled_profile

FIXTURES = resources.files("mixtest") / "data" / "tests"


def fixture_text(name):
    return (FIXTURES / f"{name}.litmus").read_text()


def fixture(name):
    return load_test(fixture_text(name))


def fixture_path(name):
    return str(FIXTURES / f"{name}.litmus")


@pytest.fixture
def profile():
    return bundled_profile


@pytest.fixture
def sb():
    return fixture("SB")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
