"""Slow brute-force references for tiny windows, used to cross-check the fast kernels."""
from __future__ import annotations

import itertools
import math

import networkx as nx
import numpy as np

from .lattice import SlabLattice


def weighted_graph(lat: SlabLattice, bits) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(lat.vertex_count))
    for e, (u, v) in enumerate(lat.edges_array()):
        g.add_edge(int(u), int(v), weight=int(bits[e]), index=e)
    return g


def passage(lat: SlabLattice, bits, src, dst) -> int:
    """Dijkstra from the set ``src`` to the set ``dst``."""
    g = weighted_graph(lat, bits)
    d = nx.multi_source_dijkstra_path_length(g, set(int(s) for s in src), weight="weight")
    return min(d[int(t)] for t in dst if int(t) in d)


def lex_geodesic(lat: SlabLattice, bits, src, dst) -> tuple[int, tuple[int, ...]]:
    """Minimal ``(weight, hops, edge-index sequence)`` over every simple path from ``src`` to ``dst``.

    Exhaustive depth-first search; a branch is cut only once its weight, or
    its weight and hop count together, can no longer beat the best path.
    """
    adj: dict[int, list[tuple[int, int, int]]] = {v: [] for v in range(lat.vertex_count)}
    for e, (u, v) in enumerate(lat.edges_array()):
        w = int(bits[e])
        adj[int(u)].append((w, e, int(v)))
        adj[int(v)].append((w, e, int(u)))
    for v in adj:
        adj[v].sort()
    targets = set(int(b) for b in dst)
    best: list = [None]

    def dfs(v, seen, edges, w):
        if v in targets:
            key = (w, len(edges), tuple(edges))
            if best[0] is None or key < best[0]:
                best[0] = key
            return
        if best[0] is not None and (w > best[0][0] or (w == best[0][0] and len(edges) >= best[0][1])):
            return
        for dw, e, u in adj[v]:
            if u not in seen:
                seen.add(u)
                edges.append(e)
                dfs(u, seen, edges, w + dw)
                edges.pop()
                seen.discard(u)

    for a in sorted(int(x) for x in src):
        dfs(a, {a}, [], 0)
    return best[0][0], best[0][2]


def open_annulus_graph(lat: SlabLattice, bits, inner: int, outer: int) -> nx.Graph:
    """Open edges with both endpoints in the annulus ``inner < r <= outer``."""
    g = nx.Graph()
    for e, (u, v) in enumerate(lat.edges_array()):
        if bits[e]:
            continue
        xu, yu, zu = lat.vertex_of(int(u))
        xv, yv, zv = lat.vertex_of(int(v))
        if inner < max(abs(xu), abs(yu)) <= outer and inner < max(abs(xv), abs(yv)) <= outer:
            g.add_edge((xu, yu, zu), (xv, yv, zv))
    return g


def winding_about(cycle, cx: float, cy: float) -> int:
    """Winding number of the projected closed polygon around ``(cx, cy)`` by summed angles."""
    total = 0.0
    n = len(cycle)
    for i in range(n):
        x0, y0 = cycle[i][0] - cx, cycle[i][1] - cy
        x1, y1 = cycle[(i + 1) % n][0] - cx, cycle[(i + 1) % n][1] - cy
        if (x0, y0) == (x1, y1):
            continue
        a = math.atan2(y1, x1) - math.atan2(y0, x0)
        while a > math.pi:
            a -= 2 * math.pi
        while a < -math.pi:
            a += 2 * math.pi
        total += a
    return round(total / (2 * math.pi))


def _windings(cycle, centres: np.ndarray) -> np.ndarray:
    """Summed-angle winding numbers of the projected polygon about each row of ``centres``."""
    pts = np.array([(c[0], c[1]) for c in cycle], dtype=float)
    ang = np.arctan2(pts[None, :, 1] - centres[:, None, 1], pts[None, :, 0] - centres[:, None, 0])
    d = np.roll(ang, -1, axis=1) - ang
    d = np.where(d > np.pi, d - 2 * np.pi, np.where(d < -np.pi, d + 2 * np.pi, d))
    return np.rint(d.sum(axis=1) / (2 * np.pi)).astype(int)


def enclosed_faces(cycle, radius: int) -> set[tuple[int, int]]:
    """Unit faces (by lower-left corner) around whose centre the cycle winds."""
    corners = [(i, j) for i in range(-radius, radius) for j in range(-radius, radius)]
    w = _windings(cycle, np.array(corners, dtype=float) + 0.5)
    return {f for f, wi in zip(corners, w) if wi != 0}


def surrounding_cycles(lat: SlabLattice, bits, inner: int, outer: int) -> list[tuple[list, int]]:
    """Every simple cycle of open annulus edges winding around the face centre ``(1/2, 1/2)``."""
    g = open_annulus_graph(lat, bits, inner, outer)
    out = []
    for cyc in nx.simple_cycles(g):
        if len(cyc) < 3:
            continue
        w = winding_about(cyc, 0.5, 0.5)
        if w:
            out.append((cyc, w))
    return out


def min_circuit_area(lat: SlabLattice, bits, inner: int, outer: int) -> int | None:
    """Smallest enclosed area over surrounding circuits of winding +-1, or None."""
    areas: dict[tuple, int] = {}
    for c, w in surrounding_cycles(lat, bits, inner, outer):
        if abs(w) == 1:
            flat = tuple((x, y) for x, y, _ in c)
            if flat not in areas:
                areas[flat] = len(enclosed_faces(c, outer))
    return min(areas.values()) if areas else None


def ring_kappa(lat: SlabLattice, bits, r_in: int, r_out: int) -> int:
    """Fewest closed edges on a path from ``r = r_in`` to ``r = r_out`` inside ``r_in <= r <= r_out``."""
    g = nx.Graph()
    xs, ys, _ = lat.coords(np.arange(lat.vertex_count))
    r = np.maximum(np.abs(xs), np.abs(ys))
    for e, (u, v) in enumerate(lat.edges_array()):
        if r_in <= r[u] <= r_out and r_in <= r[v] <= r_out:
            g.add_edge(int(u), int(v), weight=int(bits[e]))
    src = [int(v) for v in np.flatnonzero(r == r_in)]
    d = nx.multi_source_dijkstra_path_length(g, src, weight="weight")
    return min(d[int(v)] for v in np.flatnonzero(r == r_out))


def exhaustive_conditional(lat: SlabLattice, bits, frozen, p_zero: float, target) -> tuple[float, float]:
    """Exact mean and variance of ``target(bits)`` over every completion of the free edges."""
    bits = np.asarray(bits, dtype=np.uint8).copy()
    free = np.flatnonzero(~np.asarray(frozen, dtype=bool))
    mean = second = 0.0
    for assign in itertools.product((0, 1), repeat=free.size):
        a = np.array(assign, dtype=np.uint8)
        bits[free] = a
        closed = int(a.sum())
        w = p_zero ** (free.size - closed) * (1 - p_zero) ** closed
        v = float(target(bits))
        mean += w * v
        second += w * v * v
    return mean, max(0.0, second - mean * mean)
