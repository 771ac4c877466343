import numpy as np
import pytest

from conftest import constant
from slabfpp import oracles
from slabfpp.circuits import (CENSORED, CircuitCache, NoCircuitError, count_disjoint_circuits,
                              has_blocking_surface, has_surrounding_circuit, innermost_circuit, kappa_rho,
                              ring_cuts, scale_m, scan_scales)
from slabfpp.config import from_bits, sample
from slabfpp.invariants import scale_nesting
from slabfpp.lattice import OutOfWindowError, Region, SlabLattice

WINDOWS = [(3, 1, 1, 2, 0.75), (3, 0, 1, 2, 0.9), (3, 2, 1, 2, 0.66), (4, 0, 1, 3, 0.78)]


@pytest.mark.parametrize("L,k,inner,outer,p", WINDOWS)
def test_existence_and_area_match_cycle_enumeration(L, k, inner, outer, p):
    lat = SlabLattice(L, k)
    for seed in range(15):
        cfg = sample(lat, p, seed)
        bits = cfg.bits()
        want = oracles.min_circuit_area(lat, bits, inner, outer)
        assert has_surrounding_circuit(cfg, (inner, outer)) == (want is not None)
        if want is not None:
            c = innermost_circuit(cfg, Region.ring(inner, outer))
            assert c.enclosed_area == want
            assert not bits[c.edges].any()
            assert abs(c.winding) == 1


@pytest.mark.parametrize("k", [0, 1, 2])
def test_all_open_ring_gives_the_inner_square(k):
    cfg = constant(9, k, 0)
    for t in (0, 1, 2):
        c = innermost_circuit(cfg, t)
        side = 2 * ((1 << t) + 1)
        assert c.enclosed_area == side * side
        x, y, _ = cfg.lattice.coords(c.vertices)
        assert np.all(np.maximum(np.abs(x), np.abs(y)) == (1 << t) + 1)
    closed = constant(9, k, 1)
    assert not has_surrounding_circuit(closed, 1)
    with pytest.raises(NoCircuitError):
        innermost_circuit(closed, 1)


def test_innermost_is_deterministic_and_consistent():
    lat = SlabLattice(20, 1)
    for seed in range(40):
        cfg = sample(lat, 0.55, seed)
        if not has_surrounding_circuit(cfg, 2):
            continue
        a, b = innermost_circuit(cfg, 2), innermost_circuit(cfg.materialize(), 2)
        assert a.same_as(b) and np.array_equal(a.vertices, b.vertices)
        ends = lat.edges_array()[a.edges]
        v = a.vertices
        assert all({int(v[i]), int(v[(i + 1) % len(v)])} == set(map(int, ends[i])) for i in range(len(v)))
        assert len(set(v.tolist())) == len(v)
        x, y, _ = lat.coords(v)
        r = np.maximum(np.abs(x), np.abs(y))
        assert r.min() > 4 and r.max() <= 8
        frozen = set(a.frozen_edges().tolist())
        assert set(a.edges.tolist()) <= frozen


def test_opening_edges_never_enlarges_the_innermost_circuit(rng):
    lat = SlabLattice(6, 1)
    for seed in range(25):
        bits = sample(lat, 0.6, seed).bits()
        before = has_surrounding_circuit(from_bits(lat, bits), (1, 4))
        area = innermost_circuit(from_bits(lat, bits), (1, 4)).enclosed_area if before else None
        more = bits.copy()
        more[rng.choice(np.flatnonzero(bits), size=min(5, int(bits.sum())), replace=False)] = 0
        cfg = from_bits(lat, more)
        after = has_surrounding_circuit(cfg, (1, 4))
        assert after >= before
        if before:
            assert innermost_circuit(cfg, (1, 4)).enclosed_area <= area


def test_scale_function_and_nesting():
    lat = SlabLattice(40, 1)
    for seed in range(12):
        cfg = sample(lat, 0.5, seed)
        sf = scan_scales(cfg, 4)
        cache = CircuitCache(cfg)
        for p in range(5):
            m = sf.m(p)
            assert m == scale_m(cfg, p, 4) == cache.m(p, 4)
            assert m == CENSORED or (m >= p and sf.has_circuit[m])
        assert scale_nesting(cache, 4) == 0
    with pytest.raises(ValueError):
        sf.m(5)


def test_kappa_equals_rho_and_matches_dijkstra():
    for k in (0, 1, 2):
        lat = SlabLattice(9, k)
        for seed in range(20):
            cfg = sample(lat, [0.3, 0.5, 0.7][seed % 3], seed)
            cc = ring_cuts(cfg, 2, 8)
            assert cc.kappa == cc.rho == oracles.ring_kappa(lat, cfg.bits(), 2, 8)
            assert cc.verified
            bits = cfg.bits()
            seen = set()
            for cut in cc.level_cuts:
                assert bits[cut].all(), "blocking surfaces consist of closed edges"
                assert seen.isdisjoint(cut.tolist())
                seen.update(cut.tolist())


def test_blocking_surface_is_absence_of_open_crossing():
    lat = SlabLattice(17, 1)
    for seed in range(20):
        cfg = sample(lat, 0.45, seed)
        assert has_blocking_surface(cfg, 4) == (oracles.ring_kappa(lat, cfg.bits(), 4, 8) > 0)
    assert count_disjoint_circuits(constant(8, 1, 1), 1, 3) == 6
    assert kappa_rho(constant(8, 1, 0), 0, 3).kappa == 0


def test_ring_errors():
    cfg = constant(4, 0, 0)
    with pytest.raises(OutOfWindowError):
        ring_cuts(cfg, 2, 5)
    with pytest.raises(ValueError):
        kappa_rho(cfg, 2, 2)
    with pytest.raises(Exception):
        innermost_circuit(cfg, 2)
