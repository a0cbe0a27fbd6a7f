"""Shared fixtures and the acceptance-summary hook."""

from __future__ import annotations

import numpy as np
import pytest

from helpers import ACCEPTANCE_RECORDS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RECORDS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RECORDS:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
