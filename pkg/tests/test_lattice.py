import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slabfpp.lattice import (CapacityError, OutOfWindowError, Region, SlabLattice, region_mask,
                             region_vertices)


@given(st.integers(1, 6), st.integers(0, 3), st.data())
def test_vertex_index_round_trip(L, k, data):
    lat = SlabLattice(L, k)
    x, y = data.draw(st.integers(-L, L)), data.draw(st.integers(-L, L))
    z = data.draw(st.integers(0, k))
    v = lat.vertex_index(x, y, z)
    assert lat.vertex_of(v) == (x, y, z)
    xs, ys, zs = lat.coords(np.array([v]))
    assert (xs[0], ys[0], zs[0]) == (x, y, z)


@pytest.mark.parametrize("L,k", [(1, 0), (2, 1), (3, 2), (4, 0)])
def test_edges_cover_nearest_neighbour_pairs_in_global_order(L, k):
    lat = SlabLattice(L, k)
    ends = lat.edges_array()
    assert len(ends) == lat.edge_count
    W = 2 * L + 1
    assert lat.edge_count == W * W * k + 2 * W * (W - 1) * (k + 1)
    keys = ends[:, 0] * lat.vertex_count + ends[:, 1]
    assert np.all(np.diff(keys) > 0), "dense index must follow (min endpoint, max endpoint)"
    for e, (u, v) in enumerate(ends):
        a, b = np.array(lat.vertex_of(int(u))), np.array(lat.vertex_of(int(v)))
        assert np.abs(a - b).sum() == 1
        assert lat.edge_between(int(u), int(v)) == e == lat.edge_between(int(v), int(u))
        assert lat.edge_of(e) == (int(u), int(v))


def test_edge_index_array_matches_scalar():
    lat = SlabLattice(3, 2)
    ends = lat.edges_array()
    d = np.array([{1: 0, lat.layers: 1, lat.layers * lat.width: 2}[int(b - a)] for a, b in ends])
    assert np.array_equal(lat.edge_index_array(ends[:, 0], d), np.arange(lat.edge_count))


def test_geo_key_is_window_independent():
    small, big = SlabLattice(2, 1), SlabLattice(5, 1)
    for e, (u, v) in enumerate(small.edges_array()):
        uu = big.vertex_index(*small.vertex_of(int(u)))
        vv = big.vertex_index(*small.vertex_of(int(v)))
        assert small.geo_key(e) == big.geo_key(big.edge_between(uu, vv))


def test_geo_key_is_thickness_independent():
    thin, thick = SlabLattice(2, 0), SlabLattice(2, 2)
    for e, (u, v) in enumerate(thin.edges_array()):
        uu = thick.vertex_index(*thin.vertex_of(int(u)))
        vv = thick.vertex_index(*thin.vertex_of(int(v)))
        assert thin.geo_key(e) == thick.geo_key(thick.edge_between(uu, vv))


def test_invalid_windows():
    with pytest.raises(ValueError):
        SlabLattice(0, 1)
    with pytest.raises(ValueError):
        SlabLattice(2, -1)
    with pytest.raises(CapacityError):
        SlabLattice(1 << 20, 1)
    lat = SlabLattice(2, 1)
    with pytest.raises(OutOfWindowError):
        lat.vertex_index(3, 0, 0)
    with pytest.raises(OutOfWindowError):
        lat.vertex_index(0, 0, 2)


def test_regions():
    lat = SlabLattice(4, 1)
    box = region_vertices(lat, Region.box(1))
    assert box.size == 9 * 2
    ann = Region.annulus(1)
    assert (ann.inner, ann.outer) == (2, 4)
    a = region_vertices(lat, ann)
    assert a.size == (81 - 25) * 2
    xs, ys, _ = lat.coords(a)
    r = np.maximum(np.abs(xs), np.abs(ys))
    assert r.min() == 3 and r.max() == 4
    hs = region_mask(lat, Region.halfslab(2))
    xs, _, _ = lat.coords(np.arange(lat.vertex_count))
    assert np.array_equal(hs, xs >= 2)
    with pytest.raises(OutOfWindowError):
        region_vertices(lat, Region.box(5))
    with pytest.raises(ValueError):
        Region.ring(3, 3)
    assert list(region_vertices(lat, Region.explicit([5, 3, 5]))) == [3, 5]
