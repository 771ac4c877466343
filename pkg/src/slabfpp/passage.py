"""Passage times, canonical geodesics and first hits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _bfs
from .config import EdgeConfig
from .lattice import OutOfWindowError, Region, SlabLattice, region_vertices

VertexSet = Region | Iterable[int] | np.ndarray


class WindowTooSmallError(OutOfWindowError):
    """The window is too small for the requested query scale."""


class NoIntersectionError(ValueError):
    """A geodesic never meets the target set."""


@dataclass(frozen=True)
class PassageResult:
    value: int
    geodesic: tuple[int, ...] | None = None
    vertices: tuple[int, ...] | None = None
    touched_boundary: bool = False


@dataclass(frozen=True)
class GeodesicEntry:
    index: int
    vertex: int


class Workspace:
    """Reusable BFS buffers for one lattice size.

    Distances stay at ``INF`` between calls; kernels record the vertices they
    write and :meth:`release` restores only those.
    """

    _cache: dict[int, "Workspace"] = {}

    def __init__(self, n: int):
        idx = np.int32 if n < 2**31 else np.int64
        self.n = n
        self.dist = np.full(n, _bfs.INF, dtype=np.int32)
        self.pdir = np.full(n, -1, dtype=np.int8)
        self.touched = np.empty(n, dtype=idx)
        self.cur = np.empty(n, dtype=idx)
        self.nxt = np.empty(n, dtype=idx)
        self.ntouched = 0
        self._hops = None
        self._twin = None

    @classmethod
    def get(cls, lat: SlabLattice) -> "Workspace":
        ws = cls._cache.get(lat.vertex_count)
        if ws is None:
            # keep at most a couple of big buffers alive
            if sum(w.n for w in cls._cache.values()) > 20_000_000:
                cls._cache.clear()
            ws = cls._cache[lat.vertex_count] = cls(lat.vertex_count)
        if ws.ntouched:
            ws.release()
        return ws

    def hop_buffers(self):
        if self._hops is None:
            n = self.n
            self._hops = (np.zeros(n, dtype=np.int32),) + tuple(
                np.empty(n, dtype=np.int64 if i % 2 == 0 else np.int32) for i in range(6))
        return self._hops

    def twin(self) -> "Workspace":
        """Second buffer set for bidirectional searches."""
        if self._twin is None:
            self._twin = Workspace(self.n)
        elif self._twin.ntouched:
            self._twin.release()
        return self._twin

    def release(self) -> None:
        _bfs.reset(self.dist, self.touched, self.ntouched)
        self.ntouched = 0


_NONE = np.zeros(0, dtype=np.uint8)


def as_vertices(lat: SlabLattice, s: VertexSet) -> np.ndarray:
    if isinstance(s, Region):
        return region_vertices(lat, s)
    if isinstance(s, (int, np.integer)):
        return np.array([int(s)], dtype=np.int64)
    arr = np.unique(np.asarray(list(s) if not isinstance(s, np.ndarray) else s, dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= lat.vertex_count):
        raise OutOfWindowError("vertex set leaves the window")
    return arr


def _mask(lat: SlabLattice, vs: np.ndarray) -> np.ndarray:
    m = np.zeros(lat.vertex_count, dtype=np.uint8)
    m[vs] = 1
    return m


def _on_boundary(lat: SlabLattice, vs) -> bool:
    x, y, _ = lat.coords(np.asarray(vs))
    return bool(np.any(np.maximum(np.abs(x), np.abs(y)) == lat.half_width))


def distances_from(cfg: EdgeConfig, sources: VertexSet, *, within: np.ndarray | None = None) -> np.ndarray:
    """Full distance map from ``sources`` (INF-free copy; unreachable = -1)."""
    lat = cfg.lattice
    srcs = as_vertices(lat, sources)
    ws = Workspace.get(lat)
    allowed = _NONE if within is None else within.astype(np.uint8, copy=False)
    nt, _, _ = _bfs.bfs01(cfg.source, lat.half_width, lat.thickness, srcs, allowed, _NONE, False,
                          ws.dist, ws.pdir, ws.touched, ws.cur, ws.nxt)
    ws.ntouched = nt
    out = ws.dist.astype(np.int64)
    out[out == _bfs.INF] = -1
    ws.release()
    return out


def passage_time(cfg: EdgeConfig, src: VertexSet, dst: VertexSet, *,
                 within: np.ndarray | None = None) -> PassageResult:
    """Exact ``T(src, dst)`` by 0-1 BFS from the smaller of the two sets.

    The returned path is the BFS parent chain (one minimiser, not the canonical
    one); ``touched_boundary`` is computed from it.
    """
    lat = cfg.lattice
    a, b = as_vertices(lat, src), as_vertices(lat, dst)
    if a.size == 0 or b.size == 0:
        raise ValueError("source and target sets must be non-empty")
    flipped = a.size > b.size
    if flipped:
        a, b = b, a
    ws = Workspace.get(lat)
    allowed = _NONE if within is None else within.astype(np.uint8, copy=False)
    nt, hit, hitd = _bfs.bfs01(cfg.source, lat.half_width, lat.thickness, a, allowed, _mask(lat, b),
                               True, ws.dist, ws.pdir, ws.touched, ws.cur, ws.nxt)
    ws.ntouched = nt
    if hit < 0:
        ws.release()
        raise RuntimeError("target set unreachable inside the window")
    path = _bfs.trace_back(hit, ws.pdir, lat.width, lat.layers)
    ws.release()
    if flipped:
        path = path[::-1]
    return PassageResult(int(hitd), None, tuple(int(v) for v in path), _on_boundary(lat, path))


def _need_window(lat: SlabLattice, n: int) -> None:
    if n < 1:
        raise ValueError(f"scale must be >= 1, got {n}")
    if 4 * n > lat.half_width:
        raise WindowTooSmallError(f"scale n={n} needs L >= {4 * n}, window has L={lat.half_width}")


def b0n(cfg: EdgeConfig, n: int) -> PassageResult:
    """Point-to-half-slab time ``T(0, {x >= n})``."""
    lat = cfg.lattice
    _need_window(lat, n)
    return passage_time(cfg, lat.origin, Region.halfslab(n))


def box_boundary(lat: SlabLattice, r: int) -> np.ndarray:
    """Vertices of the boundary of the box ``S(r)`` (all layers)."""
    return np.setdiff1d(region_vertices(lat, Region.box(r)), region_vertices(lat, Region.box(r - 1)))


def sn(cfg: EdgeConfig, n: int) -> PassageResult:
    """Point-to-box-boundary time ``T(0, boundary of S(n))``."""
    lat = cfg.lattice
    if not 1 <= n <= lat.half_width:
        raise WindowTooSmallError(f"box S({n}) does not fit in L={lat.half_width}")
    return passage_time(cfg, lat.origin, box_boundary(lat, n))


def nearest_vertex(n: int, u: Sequence[float]) -> tuple[int, int]:
    ux, uy = float(u[0]), float(u[1])
    if abs(math.hypot(ux, uy) - 1.0) > 1e-9:
        raise ValueError(f"direction {u} is not a unit vector")
    return int(math.floor(n * ux + 0.5)), int(math.floor(n * uy + 0.5))


def point_to_point(cfg: EdgeConfig, a: int, b: int) -> PassageResult:
    """``T(a, b)`` for two vertices by a bidirectional 0-1 BFS."""
    lat = cfg.lattice
    ws = Workspace.get(lat)
    tw = ws.twin()
    (xa, ya, _), (xb, yb, _) = lat.vertex_of(int(a)), lat.vertex_of(int(b))
    oa, ob = _bfs.toward(xb - xa, yb - ya), _bfs.toward(xa - xb, ya - yb)
    val, meet, nta, ntb = _bfs.bidir01(cfg.source, lat.half_width, lat.thickness, np.int64(a), np.int64(b), oa, ob,
                                       ws.dist, ws.pdir, ws.touched, ws.cur, ws.nxt,
                                       tw.dist, tw.pdir, tw.touched, tw.cur, tw.nxt)
    ws.ntouched, tw.ntouched = nta, ntb
    if meet < 0:
        ws.release()
        tw.release()
        raise RuntimeError("target unreachable inside the window")
    head = _bfs.trace_back(meet, ws.pdir, lat.width, lat.layers)
    tail = _bfs.trace_back(meet, tw.pdir, lat.width, lat.layers)[::-1]
    ws.release()
    tw.release()
    path = np.concatenate([head, tail[1:]])
    return PassageResult(int(val), None, tuple(int(v) for v in path), _on_boundary(lat, path))


def t0nu(cfg: EdgeConfig, n: int, u: Sequence[float]) -> PassageResult:
    """Passage time from the origin to the z=0 vertex nearest ``n u``."""
    lat = cfg.lattice
    x, y = nearest_vertex(n, u)
    if 4 * max(abs(x), abs(y)) > lat.half_width or n < 1:
        raise WindowTooSmallError(f"target {(x, y)} needs L >= {4 * max(abs(x), abs(y))}")
    return point_to_point(cfg, lat.origin, lat.vertex_index(x, y, 0))


def geodesic_lex_min(cfg: EdgeConfig, src: VertexSet, dst: VertexSet, *,
                     within: np.ndarray | None = None) -> PassageResult:
    """Canonical geodesic from ``src`` to ``dst``.

    Among minimal-weight paths it minimises the hop count, then the sequence
    of dense edge indices read from the ``src`` end. Such paths are
    self-avoiding and the choice is made greedily along tight edges.
    """
    lat = cfg.lattice
    a, b = as_vertices(lat, src), as_vertices(lat, dst)
    if a.size == 0 or b.size == 0:
        raise ValueError("source and target sets must be non-empty")
    ws = Workspace.get(lat)
    hops, qv, qh, sv, sh, tv, th = ws.hop_buffers()
    stop = _mask(lat, a)
    allowed = _NONE if within is None else within.astype(np.uint8, copy=False)
    L, k = lat.half_width, lat.thickness
    nt = _bfs.bfs01_hops(cfg.source, L, k, b, allowed, stop, np.int64(a.size), ws.dist, hops,
                         ws.touched, qv, qh, sv, sh, tv, th)
    ws.ntouched = nt
    d = ws.dist[a]
    if np.all(d == _bfs.INF):
        ws.release()
        raise RuntimeError("target set unreachable inside the window")
    best = d.min()
    cands = a[d == best]
    h = hops[cands]
    cands = cands[h == h.min()]
    if h.min() == 0:
        start = int(cands.min())
    else:
        firsts = np.array([_bfs.first_edge(cfg.source, L, k, np.int64(c), ws.dist, hops) for c in cands])
        start = int(cands[np.argmin(firsts)])
    verts, edges = _bfs.greedy_path(cfg.source, L, k, np.int64(start), ws.dist, hops)
    ws.release()
    return PassageResult(int(best), tuple(int(e) for e in edges), tuple(int(v) for v in verts),
                         _on_boundary(lat, verts))


def first_hit(geodesic: PassageResult | Sequence[int], target: VertexSet,
              lat: SlabLattice | None = None) -> GeodesicEntry:
    """First vertex of the geodesic's vertex sequence lying in ``target``."""
    verts = geodesic.vertices if isinstance(geodesic, PassageResult) else geodesic
    if isinstance(target, Region):
        if lat is None:
            raise ValueError("a lattice is needed to resolve a Region target")
        target = region_vertices(lat, target)
    tset = set(int(v) for v in np.asarray(list(target) if not isinstance(target, np.ndarray) else target))
    for i, v in enumerate(verts):
        if int(v) in tset:
            return GeodesicEntry(i, int(v))
    raise NoIntersectionError("geodesic does not meet the target set")


@dataclass(frozen=True)
class Profile:
    """Several passage times of one sample, read off a single outward sweep.

    ``touched_boundary`` is set when the BFS parent path realising any of the
    answers reaches the window boundary.
    """

    b: np.ndarray
    s: np.ndarray
    t: np.ndarray
    touched_boundary: bool


def _profile_order(lat: SlabLattice, hs, bx, pts) -> np.ndarray:
    if pts.size:
        x, y, _ = lat.coords(pts)
        return _bfs.toward(float(np.mean(x)), float(np.mean(y)))
    if hs.size:
        return _bfs.toward(1.0, 0.0)
    return _bfs.toward(0.0, 0.0)


def profile(cfg: EdgeConfig, halfslab: Sequence[int] = (), boxes: Sequence[int] = (),
            points: Sequence[int] = ()) -> Profile:
    """``b(0,n)``, ``s_n`` and point-to-point times from one BFS sweep."""
    lat = cfg.lattice
    hs = np.asarray(halfslab, dtype=np.int64)
    bx = np.asarray(boxes, dtype=np.int64)
    pts = np.asarray(points, dtype=np.int64)
    ho, bo = np.argsort(hs, kind="stable"), np.argsort(bx, kind="stable")
    ws = Workspace.get(lat)
    val, hits, nt = _bfs.profile01(cfg.source, lat.half_width, lat.thickness, np.int64(lat.origin),
                                   hs[ho], bx[bo], pts, _profile_order(lat, hs, bx, pts), ws.dist, ws.pdir, ws.touched, ws.cur, ws.nxt)
    ws.ntouched = nt
    edge = False
    for h in np.unique(hits[hits >= 0]):
        if _on_boundary(lat, _bfs.trace_back(h, ws.pdir, lat.width, lat.layers)):
            edge = True
            break
    ws.release()
    if np.any(hits < 0):
        edge = True
    nb, ns = hs.size, bx.size
    b = np.empty(nb, dtype=np.int64)
    b[ho] = val[:nb]
    s = np.empty(ns, dtype=np.int64)
    s[bo] = val[nb:nb + ns]
    return Profile(b, s, val[nb + ns:], edge)
