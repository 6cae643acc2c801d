import contextlib

import numpy as np
import pytest

from ammil import AmmSpec

ACCEPTANCE_LINES = []


@contextlib.contextmanager
def criterion(number, title):
    """Record a PASS/FAIL line for an acceptance criterion, re-raising failures."""
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE_LINES.append(f"FAIL  criterion {number:>2}: {title} ({type(exc).__name__}: {exc})")
        raise
    ACCEPTANCE_LINES.append(f"PASS  criterion {number:>2}: {title}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cp():
    return AmmSpec.constant_product()


@pytest.fixture
def ss():
    return AmmSpec.stableswap(amp=1.0, d=1.0)


@pytest.fixture
def g82():
    return AmmSpec.weighted_g3m([0.8, 0.2])


# (spec, level) pairs covering every family, including n > 2
FAMILY_CASES = [
    (AmmSpec.constant_product(2), 12.0),
    (AmmSpec.constant_product(3), 8.0),
    (AmmSpec.weighted_g3m([0.8, 0.2]), 1.0),
    (AmmSpec.weighted_g3m([0.5, 0.3, 0.2]), 2.0),
    (AmmSpec.stableswap(2, amp=1.0, d=1.0), None),
    (AmmSpec.stableswap(3, amp=5.0, d=3.0), None),
]
FAMILY_IDS = ["cp2", "cp3", "g3m82", "g3m3", "ss2", "ss3"]
