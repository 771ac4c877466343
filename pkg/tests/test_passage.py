import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import constant
from slabfpp import oracles
from slabfpp.config import from_bits, sample
from slabfpp.lattice import Region, SlabLattice
from slabfpp.passage import (NoIntersectionError, WindowTooSmallError, b0n, box_boundary, distances_from,
                             first_hit, geodesic_lex_min, nearest_vertex, passage_time, point_to_point, profile,
                             sn, t0nu)

small = st.tuples(st.integers(1, 3), st.integers(0, 2), st.floats(0.1, 0.9), st.integers(0, 2**32))


@settings(max_examples=60, deadline=None)
@given(small, st.data())
def test_passage_time_matches_dijkstra(params, data):
    L, k, p, seed = params
    lat = SlabLattice(L, k)
    cfg = sample(lat, p, seed)
    bits = cfg.bits()
    verts = st.lists(st.integers(0, lat.vertex_count - 1), min_size=1, max_size=4, unique=True)
    a, b = data.draw(verts), data.draw(verts)
    want = oracles.passage(lat, bits, a, b)
    res = passage_time(cfg, a, b)
    assert res.value == want
    path = res.vertices
    assert path[0] in a and path[-1] in b
    assert sum(bits[lat.edge_between(u, v)] for u, v in zip(path, path[1:])) == want
    if a[0] != b[0]:
        assert point_to_point(cfg, a[0], b[0]).value == oracles.passage(lat, bits, a[:1], b[:1])


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(1, 1), (2, 0), (2, 1), (1, 2)]), st.floats(0.1, 0.9), st.integers(0, 2**32), st.data())
def test_canonical_geodesic_matches_enumeration(window, p, seed, data):
    lat = SlabLattice(*window)
    cfg = sample(lat, p, seed)
    bits = cfg.bits()
    verts = st.lists(st.integers(0, lat.vertex_count - 1), min_size=1, max_size=3, unique=True)
    a = data.draw(verts)
    b = [v for v in data.draw(verts) if v not in a] or [next(v for v in range(lat.vertex_count) if v not in a)]
    w, edges = oracles.lex_geodesic(lat, bits, a, b)
    res = geodesic_lex_min(cfg, a, b)
    assert (res.value, res.geodesic) == (w, edges)
    assert len(set(res.vertices)) == len(res.vertices), "canonical geodesics are self-avoiding"


def test_all_open_and_all_closed():
    open_, closed = constant(16, 1, 0), constant(16, 1, 1)
    lat = open_.lattice
    for n in (1, 2, 4):
        assert b0n(open_, n).value == 0 and sn(open_, n).value == 0
        assert b0n(closed, n).value == n and sn(closed, n).value == n
    far = lat.vertex_index(2, -1, 1)
    assert point_to_point(closed, lat.origin, far).value == 4
    d = distances_from(closed, lat.origin)
    x, y, z = lat.coords(np.arange(lat.vertex_count))
    assert np.array_equal(d, np.abs(x) + np.abs(y) + z)


def test_within_restricts_paths():
    cfg = constant(4, 0, 0)
    lat = cfg.lattice
    x, y, _ = lat.coords(np.arange(lat.vertex_count))
    allowed = (y == 0) | (x == 3)
    res = passage_time(cfg, lat.origin, lat.vertex_index(3, 3), within=allowed)
    assert res.value == 0 and all(allowed[v] for v in res.vertices)


def test_profile_agrees_with_single_queries():
    lat = SlabLattice(64, 1)
    for seed in range(5):
        cfg = sample(lat, 0.4, seed)
        ns = [16, 4, 8]
        pr = profile(cfg, halfslab=ns, boxes=ns, points=[lat.vertex_index(5, 7, 1)])
        for j, n in enumerate(ns):
            assert pr.b[j] == b0n(cfg, n).value
            assert pr.s[j] == sn(cfg, n).value
            assert pr.s[j] <= pr.b[j]
        assert pr.t[0] == point_to_point(cfg, lat.origin, lat.vertex_index(5, 7, 1)).value
        order = np.argsort(ns)
        assert np.all(np.diff(pr.s[order]) >= 0)


def test_t0nu_and_window_checks():
    lat = SlabLattice(40, 1)
    cfg = sample(lat, 0.5, 1)
    u = (1 / math.sqrt(2), 1 / math.sqrt(2))
    assert nearest_vertex(10, u) == (7, 7)
    res = t0nu(cfg, 10, u)
    assert res.value == point_to_point(cfg, lat.origin, lat.vertex_index(7, 7, 0)).value
    with pytest.raises(WindowTooSmallError):
        t0nu(cfg, 20, u)
    with pytest.raises(ValueError):
        nearest_vertex(10, (1.0, 1.0))
    with pytest.raises(WindowTooSmallError):
        b0n(cfg, 11)


def test_boundary_flag():
    cfg = constant(4, 0, 1)
    lat = cfg.lattice
    assert passage_time(cfg, lat.origin, box_boundary(lat, 4)).touched_boundary
    assert not passage_time(cfg, lat.origin, box_boundary(lat, 2)).touched_boundary


def test_first_hit():
    lat = SlabLattice(6, 1)
    cfg = sample(lat, 0.5, 3)
    geo = geodesic_lex_min(cfg, lat.origin, box_boundary(lat, 5))
    hit = first_hit(geo, Region.box(2).__class__.ring(1, 2), lat)
    x, y, _ = lat.vertex_of(hit.vertex)
    assert max(abs(x), abs(y)) == 2
    assert all(max(abs(a), abs(b)) < 2 for a, b, _ in map(lat.vertex_of, geo.vertices[:hit.index]))
    with pytest.raises(NoIntersectionError):
        first_hit(geo, [lat.vertex_index(-6, -6, 0)])


def test_empty_sets_rejected():
    cfg = constant(2, 0, 0)
    with pytest.raises(ValueError):
        passage_time(cfg, [], [0])
