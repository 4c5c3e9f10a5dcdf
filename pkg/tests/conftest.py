import json
from pathlib import Path

import pytest

from descentlab.data import subsample_and_split, synth_gaussian_classes

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def golden():
    return json.loads((GOLDEN / "fixtures.json").read_text())


@pytest.fixture(scope="session")
def small_ds():
    """120 rows, 3 classes, 20 inputs; 60 train / 40 test."""
    ds = synth_gaussian_classes(5, 40, 3, 20, 2.0)
    return subsample_and_split(ds, 5, 60, 40)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
