import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from indevo.tm import parse_machine  # noqa: E402


def bundled(name):
    return parse_machine((resources.files("indevo") / "machines" / f"{name}.tm").read_text())


@pytest.fixture
def machine():
    return bundled


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    gate = sys.modules.get("test_acceptance")
    lines = sorted(getattr(gate, "VERDICTS", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
