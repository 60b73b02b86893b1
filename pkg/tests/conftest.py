import logging

import numpy as np
import pytest

from fragkit.stats import retry_on_new_seed

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def retry():
    """Statistical checks get one retry on a fresh seed; both seeds are logged."""
    logger = logging.getLogger("fragkit.tests")

    def run(check, seed):
        ok, info, seeds = retry_on_new_seed(check, seed, logger)
        assert ok, f"failed at seeds {seeds}: {info}"
        return info

    return run


def record_acceptance(line: str):
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
