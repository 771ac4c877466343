import numpy as np
import pytest

from slabfpp.config import from_bits
from slabfpp.lattice import SlabLattice

ACCEPTANCE_LINES: list[str] = []


def constant(L: int, k: int, value: int):
    lat = SlabLattice(L, k)
    return from_bits(lat, np.full(lat.edge_count, value, dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
