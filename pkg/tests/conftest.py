import math

import numpy as np
import pytest

from ggmtree.transfer_ops import FuzzyOperator, TailRule, TransferOperator

# q = 2 reference: Q^2(0)/Q^2(1) = 4, realized by SOS at beta = arcosh(4)
REF_BETA = math.acosh(4.0)
REF_D = 3


@pytest.fixture
def ref_fz():
    return FuzzyOperator.from_values([4.0, 1.0])


@pytest.fixture
def ref_op():
    return TransferOperator.sos(REF_BETA)


def random_custom(rng: np.random.Generator, length=None) -> TransferOperator:
    """Positive even table with a geometric tail."""
    length = int(rng.integers(1, 6)) if length is None else length
    table = [1.0] + list(np.cumprod(rng.uniform(0.2, 0.9, size=length)))
    return TransferOperator.custom(table, tail=TailRule("geometric", (float(rng.uniform(0.2, 0.8)),)))


def pytest_configure(config):
    config.acceptance_log = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "acceptance_log", [])
    if log:
        terminalreporter.section("acceptance criteria")
        for line in sorted(log, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
