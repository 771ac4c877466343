"""Open circuits in slab annuli, the scale function m(p) and radial cut counts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _circuits as _k
from .config import EdgeConfig
from .lattice import OutOfWindowError, Region, SlabLattice

_UNSEEN = -(1 << 62)

#: Peeling reroutes a circuit within this many sites of the removed face.
LOCAL_RADIUS = 6
#: Frames with at most this many vertices also fall back to a full search
#: before a face is declared unremovable.
GLOBAL_LIMIT = 60_000


class NoCircuitError(LookupError):
    """The annulus carries no open circuit surrounding the origin."""


def _radii(region: Region | int | tuple[int, int]) -> tuple[int, int]:
    """``(inner, outer)`` radii of an annulus ``inner < r <= outer``.

    An integer ``t`` names the dyadic annulus ``2^t < r <= 2^(t+1)``.
    """
    if isinstance(region, (int, np.integer)):
        return 1 << int(region), 1 << (int(region) + 1)
    if isinstance(region, tuple):
        return int(region[0]), int(region[1])
    if region.kind != "annulus":
        raise ValueError(f"expected an annulus region, got {region.kind}")
    return int(region.inner), int(region.outer)


@dataclass(frozen=True, eq=False)
class Circuit:
    """A surrounding open circuit.

    ``vertices`` is the cyclic vertex sequence (global indices) and ``edges``
    the matching dense edge indices, ``edges[i]`` joining ``vertices[i]`` and
    ``vertices[i+1]``. ``faces`` marks the unit faces of the local frame of
    radius ``frame`` on which the projected winding is nonzero.
    """

    lattice: SlabLattice
    inner: int
    outer: int
    vertices: np.ndarray
    edges: np.ndarray
    winding: int
    frame: int
    faces: np.ndarray = field(repr=False)

    @property
    def enclosed_area(self) -> int:
        return int(np.count_nonzero(self.faces))

    @property
    def length(self) -> int:
        return int(self.vertices.size)

    @cached_property
    def sites(self) -> np.ndarray:
        """Sorted projected sites ``(x, y)`` of the circuit, as an (n, 2) array."""
        x, y, _ = self.lattice.coords(self.vertices)
        return np.unique(np.stack([x, y], axis=1), axis=0)

    @cached_property
    def interior_sites(self) -> np.ndarray:
        """Sites all four of whose faces have nonzero winding and that are off the circuit."""
        F = 2 * self.frame
        fm = self.faces.reshape(F, F).astype(bool)
        inside = fm[:-1, :-1] & fm[:-1, 1:] & fm[1:, :-1] & fm[1:, 1:]
        jj, ii = np.nonzero(inside)
        pts = np.stack([ii + 1 - self.frame, jj + 1 - self.frame], axis=1)
        on = {tuple(p) for p in self.sites.tolist()}
        keep = [i for i, p in enumerate(pts.tolist()) if tuple(p) not in on]
        return pts[keep]

    @cached_property
    def closed_sites(self) -> np.ndarray:
        """Projected circuit plus its interior: the sites of C-bar and int(C-bar)."""
        return np.unique(np.concatenate([self.sites, self.interior_sites]), axis=0)

    def fiber_vertices(self, which: str = "circuit") -> np.ndarray:
        """Slab vertices above ``circuit``, ``interior`` or ``closed`` sites."""
        pts = {"circuit": self.sites, "interior": self.interior_sites, "closed": self.closed_sites}[which]
        lat = self.lattice
        base = ((pts[:, 1] + lat.half_width) * lat.width + (pts[:, 0] + lat.half_width)) * lat.layers
        return (base[:, None] + np.arange(lat.layers)[None, :]).ravel()

    def frozen_edges(self) -> np.ndarray:
        """Edges determined by the circuit's sigma-field.

        These are the sides of enclosed faces on every layer, the vertical
        edges above their corners and above circuit sites, and the circuit's
        own edges (which may leave the enclosed faces on zero-winding
        excursions).
        """
        lat = self.lattice
        L, K, W, F = lat.half_width, lat.layers, lat.width, 2 * self.frame
        jj, ii = np.nonzero(self.faces.reshape(F, F))
        fx, fy = ii - self.frame, jj - self.frame
        out = []
        for dx, dy, d in ((0, 0, 1), (0, 1, 1), (0, 0, 2), (1, 0, 2)):
            s = (fy + dy + L) * W + (fx + dx + L)
            for z in range(K):
                out.append(lat.edge_index_array(s * K + z, d))
        corners = np.unique(np.concatenate([
            (fy + dy + L) * W + (fx + dx + L) for dx in (0, 1) for dy in (0, 1)]))
        on = (self.sites[:, 1] + L) * W + (self.sites[:, 0] + L)
        corners = np.union1d(corners, on)
        for z in range(lat.thickness):
            out.append(lat.edge_index_array(corners * K + z, 0))
        out.append(np.asarray(self.edges, dtype=np.int64))
        return np.unique(np.concatenate(out))

    def contains(self, other: "Circuit") -> bool:
        """True iff every site of ``other`` lies strictly inside this circuit."""
        inner = {tuple(p) for p in self.interior_sites.tolist()}
        return all(tuple(p) in inner for p in other.sites.tolist())

    def same_as(self, other: "Circuit") -> bool:
        return np.array_equal(np.sort(self.edges), np.sort(other.edges))

    def to_json(self) -> str:
        return json.dumps({"edges": [int(e) for e in self.edges], "winding": int(self.winding),
                           "area": self.enclosed_area, "L": self.lattice.half_width,
                           "k": self.lattice.thickness})


def _check(lat: SlabLattice, outer: int) -> None:
    if outer + 1 > lat.half_width:
        raise OutOfWindowError(f"annulus of radius {outer} needs L >= {outer + 1}")


class _Frame:
    """Open-edge flags of one annulus plus reusable scratch buffers."""

    def __init__(self, cfg: EdgeConfig, inner: int, outer: int):
        lat = cfg.lattice
        _check(lat, outer)
        self.lat = lat
        self.inner, self.outer = inner, outer
        self.M = outer + 1
        self.G = 2 * self.M + 1
        self.K = lat.layers
        self.ops = _k.annulus_flags(cfg.source, lat.half_width, lat.thickness, self.M, inner, outer)
        n = self.G * self.G * self.K
        self.label = np.full(n, -1, dtype=np.int64)
        self.par = np.zeros(n, dtype=np.int64)
        self.queue = np.empty(n, dtype=np.int64)
        self.sheet = np.full(n, _UNSEEN, dtype=np.int64)
        self.parent = np.empty(n, dtype=np.int64)
        self.label.fill(-1)
        flags = _k.winding_components(self.G, self.K, self.ops, self.label, self.par, self.queue)
        self.any = bool(flags.any())
        self.live = _k.restrict_to_winding(self.ops, self.label, flags) if self.any else None

    def first_circuit(self, ops: np.ndarray, candidates: np.ndarray | None = None) -> np.ndarray:
        """Circuit from the BFS rooted at the smallest eligible vertex of a winding component."""
        self.label.fill(-1)
        flags = _k.winding_components(self.G, self.K, ops, self.label, self.par, self.queue)
        if not flags.any():
            return np.empty(0, dtype=np.int64)
        has_edge = (ops.reshape(-1, 3) == 1).any(axis=1)
        # vertices entered only from below still belong to their component
        ok = flags[self.label].astype(bool) & (has_edge | _down_open(ops, self.K))
        if candidates is not None:
            sel = ok & candidates
            if sel.any():
                ok = sel
        tried = set()
        for root in np.flatnonzero(ok):
            comp = int(self.label[root])
            if comp in tried:
                continue
            tried.add(comp)
            cyc, w = _k.extract_circuit(self.G, self.K, ops, root, self.sheet, self.parent, self.queue)
            if cyc.size:
                return cyc
        return np.empty(0, dtype=np.int64)

    def to_circuit(self, cyc: np.ndarray) -> Circuit:
        lat = self.lat
        g = _k.local_to_global(cyc, self.G, self.K, lat.half_width)
        g = _canonical(g)
        loc = _to_local(g, lat, self.M)
        w = int(_k.cycle_winding(self.G, self.K, loc))
        faces = _k.face_winding(self.G, self.K, loc)
        return Circuit(lat, self.inner, self.outer, g, _k.cycle_edges(g, lat.half_width, self.K), w, self.M,
                       (faces != 0).astype(np.uint8))


def _down_open(ops: np.ndarray, K: int) -> np.ndarray:
    """Vertices with an open edge to the layer below."""
    up = ops[0::3] == 1
    out = np.zeros_like(up)
    out[1:] = up[:-1]
    z = np.arange(up.size) % K
    out[z == 0] = False
    return out


def _to_local(g: np.ndarray, lat: SlabLattice, M: int) -> np.ndarray:
    x, y, z = lat.coords(g)
    G = 2 * M + 1
    return ((y + M) * G + (x + M)) * lat.layers + z


def _canonical(cyc: np.ndarray) -> np.ndarray:
    """Rotate to start at the smallest vertex; direction towards the smaller neighbour."""
    i = int(np.argmin(cyc))
    c = np.roll(cyc, -i)
    if c.size > 2 and c[-1] < c[1]:
        c = np.concatenate([c[:1], c[1:][::-1]])
    return c


def has_surrounding_circuit(cfg: EdgeConfig, annulus: Region | int) -> bool:
    """Whether the open edges of the annulus carry a circuit winding around the origin."""
    inner, outer = _radii(annulus)
    return _Frame(cfg, inner, outer).any


def innermost_circuit(cfg: EdgeConfig, annulus: Region | int) -> Circuit:
    """The innermost surrounding open circuit of the annulus.

    Every surrounding circuit winds around each face of the forced region
    grown from the hole across sides that carry no usable open edge. When a
    circuit runs inside the closure of that region its area is minimal and it
    is returned directly; otherwise a first circuit is shrunk by peeling faces
    from outside while a surrounding circuit survives. Ties go to the circuit
    found first by a breadth-first search in edge-index order.
    """
    inner, outer = _radii(annulus)
    fr = _Frame(cfg, inner, outer)
    if not fr.any:
        raise NoCircuitError(f"no open circuit in the annulus {inner} < r <= {outer}")
    forced, escaped = _k.grow_forced(fr.G, fr.K, fr.live, inner)
    if escaped:
        raise NoCircuitError(f"no open circuit in the annulus {inner} < r <= {outer}")
    sub = _k.closure_flags(fr.G, fr.K, fr.live, forced)
    cyc = fr.first_circuit(sub)
    if cyc.size:
        c = fr.to_circuit(cyc)
        if c.enclosed_area == int(forced.sum()):
            return c
    start = fr.first_circuit(fr.live, _near(forced, fr))
    faces = (_k.face_winding(fr.G, fr.K, start) != 0).astype(np.uint8) | forced
    cyc, _ = _k.peel(fr.G, fr.K, fr.live, forced, faces, start, fr.label, fr.par, fr.queue, fr.sheet,
                     fr.parent, LOCAL_RADIUS, GLOBAL_LIMIT)
    return fr.to_circuit(cyc)


def _near(forced: np.ndarray, fr: _Frame) -> np.ndarray:
    """Vertices at corners of forced faces."""
    F = fr.G - 1
    fm = forced.reshape(F, F).astype(bool)
    site = np.zeros((fr.G, fr.G), dtype=bool)
    site[:-1, :-1] |= fm
    site[:-1, 1:] |= fm
    site[1:, :-1] |= fm
    site[1:, 1:] |= fm
    return np.repeat(site.ravel(), fr.K)


# -- scale function --------------------------------------------------------

CENSORED = -1


@dataclass(frozen=True)
class ScaleFunction:
    """``m(p)`` for ``p`` in ``p_min..p_max`` plus the per-annulus circuit flags."""

    p_min: int
    p_max: int
    has_circuit: tuple[bool, ...]

    def m(self, p: int) -> int:
        """Smallest ``t >= p`` whose annulus has a circuit, or ``CENSORED``."""
        if not self.p_min <= p <= self.p_max:
            raise ValueError(f"p={p} outside scan range {self.p_min}..{self.p_max}")
        for t in range(p, self.p_max + 1):
            if self.has_circuit[t - self.p_min]:
                return t
        return CENSORED

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(self.m(p) for p in range(self.p_min, self.p_max + 1))


def scan_scales(cfg: EdgeConfig, p_max: int, p_min: int = 0) -> ScaleFunction:
    flags = tuple(has_surrounding_circuit(cfg, t) for t in range(p_min, p_max + 1))
    return ScaleFunction(p_min, p_max, flags)


def scale_m(cfg: EdgeConfig, p: int, p_max: int) -> int:
    """``m(p)``: the first ``t >= p`` whose dyadic annulus has a surrounding open circuit."""
    if p > p_max:
        raise ValueError("p must not exceed p_max")
    _check(cfg.lattice, 1 << (p_max + 1))
    for t in range(p, p_max + 1):
        if has_surrounding_circuit(cfg, t):
            return t
    return CENSORED


class CircuitCache:
    """Per-sample memo of circuit flags and innermost circuits by annulus."""

    def __init__(self, cfg: EdgeConfig):
        self.cfg = cfg
        self._has: dict[int, bool] = {}
        self._inner: dict[int, Circuit] = {}

    def has(self, t: int) -> bool:
        if t not in self._has:
            self._has[t] = has_surrounding_circuit(self.cfg, t)
        return self._has[t]

    def m(self, p: int, p_max: int) -> int:
        for t in range(p, p_max + 1):
            if self.has(t):
                return t
        return CENSORED

    def circuit(self, t: int) -> Circuit:
        if t not in self._inner:
            self._inner[t] = innermost_circuit(self.cfg, t)
        return self._inner[t]

    def c_p(self, p: int, p_max: int) -> Circuit | None:
        t = self.m(p, p_max)
        return None if t == CENSORED else self.circuit(t)


# -- radial cuts -------------------------------------------------------------

@dataclass(frozen=True)
class CutCount:
    """``kappa``: fewest closed edges on a radial path; ``rho``: disjoint blocking surfaces.

    ``level_cuts[l]`` lists the dense edge indices of the ``l``-th blocking
    surface.
    """

    kappa: int
    rho: int
    level_cuts: tuple[np.ndarray, ...]
    verified: bool


def _slots_to_edges(lat: SlabLattice, slots: np.ndarray, M: int) -> np.ndarray:
    idx = np.flatnonzero(slots)
    v, d = np.divmod(idx, 3)
    G, K = 2 * M + 1, lat.layers
    s, z = np.divmod(v, K)
    ly, lx = np.divmod(s, G)
    gv = lat.vertex_index_array(lx - M, ly - M, z)
    return np.sort(lat.edge_index_array(gv, d))


def ring_cuts(cfg: EdgeConfig, r_in: int, r_out: int, verify: bool = True) -> CutCount:
    """Cut counts for the closed ring ``r_in <= r <= r_out``."""
    lat = cfg.lattice
    if not 1 <= r_in < r_out <= lat.half_width:
        raise OutOfWindowError(f"ring {r_in}..{r_out} does not fit in L={lat.half_width}")
    wt = _k.ring_weights(cfg.source, lat.half_width, lat.thickness, r_in, r_out)
    G, K = 2 * r_out + 1, lat.layers
    none = np.zeros(0, dtype=np.uint8)
    dist = _k.ring_distances(G, K, wt, r_in, none)
    kappa = int(_k.outer_min(G, K, dist, r_out))
    slots = [_k.level_cut_slots(G, K, wt, dist, lvl) for lvl in range(1, kappa + 1)]
    ok = True
    if verify:
        total = np.zeros(wt.size, dtype=np.int64)
        for sl in slots:
            total += sl
            d2 = _k.ring_distances(G, K, wt, r_in, sl)
            # separating: removing the cut leaves the outer boundary unreachable
            if _k.outer_min(G, K, d2, r_out) >= 0:
                ok = False
            if not sl.any():
                ok = False
        if total.size and total.max(initial=0) > 1:
            ok = False
    cuts = tuple(_slots_to_edges(lat, sl, r_out) for sl in slots)
    return CutCount(kappa, len(cuts), cuts, ok)


def kappa_rho(cfg: EdgeConfig, j: int, k: int, verify: bool = True) -> CutCount:
    """Cut counts between ``boundary S(2^j)`` and ``boundary S(2^k)``."""
    if not 0 <= j < k:
        raise ValueError("need 0 <= j < k")
    return ring_cuts(cfg, 1 << j, 1 << k, verify)


def count_disjoint_circuits(cfg: EdgeConfig, j: int, k: int) -> int:
    """Number of edge-disjoint closed blocking surfaces around ``S(2^j)`` inside ``S(2^k)``."""
    return kappa_rho(cfg, j, k, verify=False).rho


def has_blocking_surface(cfg: EdgeConfig, n: int) -> bool:
    """True iff no open path joins ``boundary S(n)`` to ``boundary S(2n)``."""
    return ring_cuts(cfg, n, 2 * n, verify=False).kappa >= 1
