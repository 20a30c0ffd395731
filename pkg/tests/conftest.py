import json
from pathlib import Path

import pytest

from cachebench.catalog import load_default_catalog
from cachebench.config import default_machine

DATA = Path(__file__).parent / "data"


def load_data(name):
    return json.loads((DATA / name).read_text())


@pytest.fixture(scope="session")
def catalog():
    return load_default_catalog()


@pytest.fixture(scope="session")
def machine():
    return default_machine()


CRITERIA_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
