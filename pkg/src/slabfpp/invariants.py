"""Per-sample geometric inequalities that must hold on every configuration.

Each check returns the number of violations it found so that batch runs can
sum them.
"""
from __future__ import annotations

import numpy as np

from .circuits import CENSORED, CircuitCache
from .config import EdgeConfig
from .passage import box_boundary, distances_from, nearest_vertex, passage_time


def scale_nesting(cache: CircuitCache, p_max: int, p_min: int = 0) -> int:
    """Pairs ``p1 < p2`` violating: same scale and same circuit, or the first circuit strictly inside the second."""
    bad = 0
    for p1 in range(p_min, p_max + 1):
        m1 = cache.m(p1, p_max)
        if m1 == CENSORED:
            continue
        for p2 in range(p1 + 1, p_max + 1):
            m2 = cache.m(p2, p_max)
            if m2 == CENSORED:
                continue
            if m1 > m2:
                bad += 1
            elif m1 == m2:
                bad += not cache.circuit(m1).same_as(cache.circuit(m2))
            else:
                bad += not cache.circuit(m2).contains(cache.circuit(m1))
    return bad


def circuit_column_spread(cfg: EdgeConfig, cache: CircuitCache, t: int, dist: np.ndarray | None = None) -> int:
    """Vertices above circuit ``t`` whose passage time from the origin differs from ``T(0, C)`` by more than ``k``."""
    c = cache.circuit(t)
    if dist is None:
        dist = distances_from(cfg, cfg.lattice.origin)
    d_c = dist[c.vertices]
    d_f = dist[c.fiber_vertices()]
    if np.any(d_c < 0) or np.any(d_f < 0):
        return 0
    return int(np.count_nonzero(np.abs(d_f - d_c.min()) > cfg.lattice.thickness))


def sandwich(s_n: int, b_n: int, t_circuit: int | None = None) -> int:
    """``s_n <= b(0,n)``, and ``b(0,n) <= T(0, C_m(q))`` when that circuit is known."""
    bad = int(s_n > b_n)
    if t_circuit is not None:
        bad += int(b_n > t_circuit)
    return bad


def box_monotone(s_values) -> int:
    """Decreases in ``s_n`` along increasing ``n``."""
    s = np.asarray(s_values)
    return int(np.count_nonzero(np.diff(s) < 0))


def split_radius(n: int, u) -> int:
    """``2^(r-1)`` with ``2^(r-1) < n u_1 / 2 <= 2^r``, ``u_1`` the larger coordinate."""
    u1 = max(abs(float(u[0])), abs(float(u[1])))
    half = n * u1 / 2
    r = int(np.ceil(np.log2(half)))
    while 2 ** (r - 1) >= half:
        r -= 1
    while 2 ** r < half:
        r += 1
    return 2 ** (r - 1)


def split_bound(cfg: EdgeConfig, n: int, u, t_nu: int) -> int:
    """``T(0, nu) >= T(0, boundary S') + T(nu, boundary S'')`` for disjoint boxes of radius ``2^(r-1)``."""
    lat = cfg.lattice
    h = split_radius(n, u)
    x, y = nearest_vertex(n, u)
    a = passage_time(cfg, lat.origin, box_boundary(lat, h)).value
    xs, ys, zs = lat.coords(box_boundary(lat, h))
    shifted = lat.vertex_index_array(xs + x, ys + y, zs)
    b = passage_time(cfg, lat.vertex_index(x, y, 0), shifted).value
    return int(t_nu < a + b)
