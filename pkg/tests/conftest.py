from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

from lrank import caps

settings.register_profile("lrank", max_examples=60, deadline=None)
settings.load_profile("lrank")


@pytest.fixture(autouse=True)
def _reset_caps():
    caps.reset()
    yield
    caps.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = getattr(sys.modules.get("test_acceptance"), "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
