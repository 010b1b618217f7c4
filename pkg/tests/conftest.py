import json
from pathlib import Path

import numpy as np
import pytest

from gmlbench.dynamics import IntegratorSettings, SwitchingSchedule
from gmlbench.identities import DerivativeSettings, set_tolerances

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
ORACLES = HERE / "oracles"

TWO_LEVEL_G02 = (1 - np.sqrt(1.16)) / 2


@pytest.fixture(autouse=True)
def _default_tolerances():
    set_tolerances(None)
    yield
    set_tolerances(None)


@pytest.fixture
def settings():
    return IntegratorSettings(1e-3)


@pytest.fixture
def dset():
    return DerivativeSettings(1e-4)


@pytest.fixture
def sched03():
    return SwitchingSchedule(0.3)


def load_golden(name):
    return json.loads((ORACLES / name).read_text())


ACCEPTANCE_LOG: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(ACCEPTANCE_LOG[number])
