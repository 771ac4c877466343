import math

import numpy as np

from conftest import constant
from slabfpp import invariants as inv
from slabfpp.circuits import CircuitCache
from slabfpp.config import sample
from slabfpp.lattice import SlabLattice
from slabfpp.passage import t0nu

DIAG = (1 / math.sqrt(2), 1 / math.sqrt(2))


def test_simple_inequalities():
    assert inv.sandwich(2, 3) == 0 and inv.sandwich(4, 3) == 1
    assert inv.sandwich(2, 3, 2) == 1 and inv.sandwich(2, 3, 5) == 0
    assert inv.box_monotone([0, 1, 1, 3]) == 0 and inv.box_monotone([0, 2, 1]) == 1


def test_split_radius():
    for n in (8, 16, 100, 512):
        h = inv.split_radius(n, DIAG)
        half = n * DIAG[0] / 2
        assert h < half <= 2 * h
    assert inv.split_radius(16, (1.0, 0.0)) == 4


def test_split_bound_holds():
    lat = SlabLattice(64, 1)
    for seed in range(15):
        cfg = sample(lat, 0.4, seed)
        assert inv.split_bound(cfg, 16, DIAG, t0nu(cfg, 16, DIAG).value) == 0
    closed = constant(64, 1, 1)
    assert inv.split_bound(closed, 16, DIAG, t0nu(closed, 16, DIAG).value) == 0
    assert inv.split_bound(closed, 16, DIAG, 0) == 1


def test_circuit_invariants_on_supercritical_samples():
    lat = SlabLattice(40, 1)
    for seed in range(8):
        cfg = sample(lat, 0.5, seed)
        cache = CircuitCache(cfg)
        assert inv.scale_nesting(cache, 4) == 0
        for t in range(5):
            if cache.has(t):
                assert inv.circuit_column_spread(cfg, cache, t) == 0
