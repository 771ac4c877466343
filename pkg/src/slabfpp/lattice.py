"""Finite windows of the slab Z^2 x {0..k}: indexing, regions and projection.

Vertices are indexed plane-site major with the layer varying fastest::

    v = ((y + L) * W + (x + L)) * K + z,   W = 2L + 1,  K = k + 1

Every edge is owned by its lower-index endpoint and points in one of three
directions (``DZ``, ``DX``, ``DY``), which also orders the edges of a vertex by
their upper endpoint. The dense edge index therefore realises the global order
``(min endpoint, max endpoint)`` used for all deterministic tie-breaks.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

DZ, DX, DY = 0, 1, 2

#: Hard ceiling on window size; index arithmetic is int64 but dense arrays
#: over a window beyond this would not fit a workstation anyway.
MAX_VERTICES = 1 << 32

_GEO_OFFSET = 1 << 20


class CapacityError(ValueError):
    """Requested window exceeds the addressable capacity."""


class OutOfWindowError(ValueError):
    """A region or vertex does not fit inside the lattice window."""


@dataclass(frozen=True)
class SlabLattice:
    """The window ``[-L, L]^2 x [0, k]`` of the slab."""

    half_width: int
    thickness: int
    width: int = field(init=False)
    layers: int = field(init=False)
    vertex_count: int = field(init=False)
    edge_count: int = field(init=False)

    def __post_init__(self):
        L, k = int(self.half_width), int(self.thickness)
        if L < 1:
            raise ValueError(f"half_width must be >= 1, got {L}")
        if k < 0:
            raise ValueError(f"thickness must be >= 0, got {k}")
        W, K = 2 * L + 1, k + 1
        V = W * W * K
        if V > MAX_VERTICES or L >= _GEO_OFFSET:
            raise CapacityError(f"window L={L}, k={k} has {V} vertices (limit {MAX_VERTICES})")
        object.__setattr__(self, "half_width", L)
        object.__setattr__(self, "thickness", k)
        object.__setattr__(self, "width", W)
        object.__setattr__(self, "layers", K)
        object.__setattr__(self, "vertex_count", V)
        object.__setattr__(self, "edge_count", W * W * k + 2 * W * (W - 1) * K)

    # -- vertices -----------------------------------------------------------
    def contains(self, x: int, y: int, z: int) -> bool:
        L = self.half_width
        return -L <= x <= L and -L <= y <= L and 0 <= z <= self.thickness

    def vertex_index(self, x: int, y: int, z: int = 0) -> int:
        if not self.contains(x, y, z):
            raise OutOfWindowError(f"vertex {(x, y, z)} outside window L={self.half_width}, k={self.thickness}")
        L = self.half_width
        return ((y + L) * self.width + (x + L)) * self.layers + z

    def vertex_of(self, v: int) -> tuple[int, int, int]:
        if not 0 <= v < self.vertex_count:
            raise IndexError(v)
        s, z = divmod(int(v), self.layers)
        yy, xx = divmod(s, self.width)
        return xx - self.half_width, yy - self.half_width, z

    def coords(self, vs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised inverse of :meth:`vertex_index`."""
        vs = np.asarray(vs, dtype=np.int64)
        s, z = np.divmod(vs, self.layers)
        yy, xx = np.divmod(s, self.width)
        return xx - self.half_width, yy - self.half_width, z

    @property
    def origin(self) -> int:
        return self.vertex_index(0, 0, 0)

    # -- edges --------------------------------------------------------------
    def edge_index(self, v: int, direction: int) -> int:
        """Dense index of the edge leaving ``v`` towards +z, +x or +y."""
        s, z = divmod(int(v), self.layers)
        yy, xx = divmod(s, self.width)
        e = _dense_edge(xx, yy, z, direction, self.width, self.thickness)
        if e < 0:
            raise OutOfWindowError(f"no edge in direction {direction} at vertex {v}")
        return e

    def vertex_index_array(self, x, y, z) -> np.ndarray:
        """Vectorised :meth:`vertex_index` without bounds checks."""
        L = self.half_width
        return ((np.asarray(y, dtype=np.int64) + L) * self.width + (np.asarray(x, dtype=np.int64) + L)) \
            * self.layers + np.asarray(z, dtype=np.int64)

    def edge_index_array(self, v, direction) -> np.ndarray:
        """Vectorised :meth:`edge_index` (edges are assumed to exist)."""
        W, k = self.width, self.thickness
        s, z = np.divmod(np.asarray(v, dtype=np.int64), self.layers)
        yy, xx = np.divmod(s, W)
        d = np.broadcast_to(np.asarray(direction, dtype=np.int64), z.shape)
        hx = (xx < W - 1).astype(np.int64)
        hy = (yy < W - 1).astype(np.int64)
        hz = (z < k).astype(np.int64)
        pre = s * k + self.layers * (yy * (W - 1) + xx) + self.layers * (yy * W + np.where(yy < W - 1, xx, 0))
        rank = np.where(d == DZ, 0, np.where(d == DX, hz, hz + hx))
        return pre + z * (1 + hx + hy) + rank

    def edge_between(self, u: int, v: int) -> int:
        a, b = (u, v) if u < v else (v, u)
        d = b - a
        if d == 1 and b % self.layers != 0:
            return self.edge_index(a, DZ)
        if d == self.layers and (a // self.layers) % self.width != self.width - 1:
            return self.edge_index(a, DX)
        if d == self.layers * self.width:
            return self.edge_index(a, DY)
        raise ValueError(f"vertices {u} and {v} are not adjacent")

    def edge_of(self, e: int) -> tuple[int, int]:
        """Endpoints ``(lower, upper)`` of the dense edge ``e``."""
        if not 0 <= e < self.edge_count:
            raise IndexError(e)
        W, k, K = self.width, self.thickness, self.layers
        # site prefix counts are monotone in the site index: bisect on it
        lo, hi = 0, W * W - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if _site_prefix(mid % W, mid // W, W, k) <= e:
                lo = mid
            else:
                hi = mid - 1
        xx, yy = lo % W, lo // W
        hx, hy = int(xx < W - 1), int(yy < W - 1)
        rem = e - _site_prefix(xx, yy, W, k)
        for z in range(K):
            own = [DZ] * (z < k) + [DX] * hx + [DY] * hy
            if rem < len(own):
                u = (lo * K) + z
                step = {DZ: 1, DX: K, DY: K * W}[own[rem]]
                return u, u + step
            rem -= len(own)
        raise AssertionError("edge decoding fell through")

    def edges_array(self) -> np.ndarray:
        """All edges as an ``(E, 2)`` array of endpoint indices in dense order."""
        W, K, k = self.width, self.layers, self.thickness
        v = np.arange(self.vertex_count, dtype=np.int64)
        z = v % K
        s = v // K
        xx, yy = s % W, s // W
        cand = np.stack([
            np.where(z < k, v + 1, -1),
            np.where(xx < W - 1, v + K, -1),
            np.where(yy < W - 1, v + K * W, -1),
        ], axis=1)
        ok = cand >= 0
        lo = np.broadcast_to(v[:, None], cand.shape)[ok]
        return np.stack([lo, cand[ok]], axis=1)

    def geo_key(self, e: int) -> int:
        """Window-independent identifier of an edge (used to seed its weight)."""
        u, w = self.edge_of(e)
        x, y, z = self.vertex_of(u)
        d = {1: DZ, self.layers: DX, self.layers * self.width: DY}[w - u]
        return _geo_key(x, y, z, d)

    # -- projection ----------------------------------------------------------
    def project(self, v: int) -> tuple[int, int]:
        x, y, _ = self.vertex_of(v)
        return x, y

    def fiber(self, x: int, y: int) -> list[int]:
        return [self.vertex_index(x, y, z) for z in range(self.layers)]

    def touches_boundary(self, v: int) -> bool:
        x, y, _ = self.vertex_of(v)
        return max(abs(x), abs(y)) == self.half_width


def _site_prefix(xx: int, yy: int, W: int, k: int) -> int:
    K = k + 1
    s = yy * W + xx
    return s * k + K * (yy * (W - 1) + xx) + K * (yy * W + (xx if yy < W - 1 else 0))


def _dense_edge(xx: int, yy: int, z: int, d: int, W: int, k: int) -> int:
    hx, hy = int(xx < W - 1), int(yy < W - 1)
    hz = int(z < k)
    if (d == DZ and not hz) or (d == DX and not hx) or (d == DY and not hy):
        return -1
    rank = 0 if d == DZ else (hz if d == DX else hz + hx)
    return _site_prefix(xx, yy, W, k) + z * (1 + hx + hy) + rank


def _geo_key(x: int, y: int, z: int, d: int) -> int:
    return ((((x + _GEO_OFFSET) << 21 | (y + _GEO_OFFSET)) << 16 | z) << 2) | d


def build_lattice(L: int, k: int) -> SlabLattice:
    return SlabLattice(L, k)


# -- regions ------------------------------------------------------------------

@dataclass(frozen=True)
class Region:
    """A vertex set of the slab window, described by plane geometry.

    ``box``: ``max(|x|,|y|) <= r``. ``annulus``: ``inner < max(|x|,|y|) <= outer``;
    the dyadic annulus ``A(p)`` has ``inner = 2**p, outer = 2**(p+1)``.
    ``halfslab``: ``x >= n``. ``explicit``: an arbitrary set of vertex indices.
    Every region is a union of full fibres except ``explicit`` ones.
    """

    kind: str
    inner: int = 0
    outer: int = 0
    vertices: tuple[int, ...] = ()

    @classmethod
    def box(cls, r: int) -> "Region":
        return cls("box", outer=int(r))

    @classmethod
    def annulus(cls, p: int) -> "Region":
        return cls("annulus", inner=1 << p, outer=1 << (p + 1))

    @classmethod
    def ring(cls, inner: int, outer: int) -> "Region":
        if not 0 <= inner < outer:
            raise ValueError(f"need 0 <= inner < outer, got {inner}, {outer}")
        return cls("annulus", inner=int(inner), outer=int(outer))

    @classmethod
    def halfslab(cls, n: int) -> "Region":
        return cls("halfslab", inner=int(n))

    @classmethod
    def explicit(cls, vertices: Iterable[int]) -> "Region":
        return cls("explicit", vertices=tuple(sorted(set(int(v) for v in vertices))))

    def check_window(self, lat: SlabLattice) -> None:
        L = lat.half_width
        bad = (
            (self.kind in ("box", "annulus") and self.outer > L)
            or (self.kind == "halfslab" and not -L <= self.inner <= L)
            or (self.kind == "explicit" and self.vertices
                and (self.vertices[0] < 0 or self.vertices[-1] >= lat.vertex_count))
        )
        if bad:
            raise OutOfWindowError(f"{self} does not fit in window L={L}")

    def plane_mask(self, lat: SlabLattice) -> np.ndarray:
        """Boolean ``(W, W)`` mask over plane sites, indexed ``[y + L, x + L]``."""
        if self.kind == "explicit":
            raise TypeError("explicit regions are not fibre unions")
        self.check_window(lat)
        L = lat.half_width
        c = np.arange(-L, L + 1)
        X, Y = np.meshgrid(c, c)  # X varies along axis 1
        r = np.maximum(np.abs(X), np.abs(Y))
        if self.kind == "box":
            return r <= self.outer
        if self.kind == "annulus":
            return (r > self.inner) & (r <= self.outer)
        if self.kind == "halfslab":
            return X >= self.inner
        raise ValueError(f"unknown region kind {self.kind!r}")


def region_vertices(lat: SlabLattice, region: Region) -> np.ndarray:
    """Sorted vertex indices of ``region``."""
    if region.kind == "explicit":
        region.check_window(lat)
        return np.asarray(region.vertices, dtype=np.int64)
    sites = np.flatnonzero(region.plane_mask(lat).ravel())
    K = lat.layers
    return (sites[:, None] * K + np.arange(K)[None, :]).ravel().astype(np.int64)


def region_mask(lat: SlabLattice, region: Region) -> np.ndarray:
    """Boolean mask of length ``vertex_count``."""
    m = np.zeros(lat.vertex_count, dtype=np.bool_)
    m[region_vertices(lat, region)] = True
    return m


def project(lat: SlabLattice, v) -> tuple[int, int]:
    """Plane coordinates of a slab vertex given by index or ``(x, y, z)``."""
    if isinstance(v, tuple):
        return int(v[0]), int(v[1])
    return lat.project(v)
