"""0-1 breadth-first search kernels.

All kernels share the two-bucket frontier discipline: the current distance
level is processed as a stack (zero-cost edges push onto it), unit-cost edges
push onto the next level. Each vertex enters each bucket at most once, so the
work is O(V + E) and settle order is nondecreasing in distance.

Distance buffers are owned by the caller (see ``passage.Workspace``) and must
hold ``INF`` on entry; every written vertex is appended to ``touched`` so the
caller can restore them in O(touched).
"""
import numpy as np
from numba import njit

from ._core import decode, neighbor, step, step_edge

INF = np.int32(2**31 - 1)


def toward(dx: float, dy: float) -> np.ndarray:
    """Direction push order whose last entries point along ``(dx, dy)``.

    Stacks pop the last pushed vertex first, so zero-cost exploration then
    runs preferentially towards the target.
    """
    score = {0: 0.0, 1: 0.0, 2: dx, 3: -dx, 4: dy, 5: -dy}
    return np.array(sorted(range(6), key=lambda d: (score[d], d)), dtype=np.int64)


@njit(cache=True)
def reset(dist, touched, n):
    for i in range(n):
        dist[touched[i]] = INF


@njit(cache=True)
def bfs01(src, L, k, sources, allowed, target, stop_on_target, dist, pdir, touched, cur, nxt):
    """Multi-source 0-1 BFS.

    ``allowed``/``target`` are uint8 vertex masks (empty = everything/nothing).
    ``pdir[v]`` records the direction code used to enter ``v`` (-1 at sources).
    Returns ``(n_touched, hit_vertex, hit_dist)``; ``hit_vertex = -1`` if no
    target was settled before exhaustion.
    """
    W = 2 * L + 1
    K = k + 1
    use_allowed = allowed.size > 0
    use_target = target.size > 0
    nt = 0
    nc = 0
    for i in range(sources.size):
        s = sources[i]
        if use_allowed and allowed[s] == 0:
            continue
        if dist[s] == INF:
            touched[nt] = s
            nt += 1
        if dist[s] != 0:
            dist[s] = 0
            pdir[s] = -1
            cur[nc] = s
            nc += 1
    level = 0
    hit = -1
    hitd = -1
    while nc > 0:
        nn = 0
        while nc > 0:
            nc -= 1
            v = cur[nc]
            if dist[v] != level:
                continue
            if use_target and target[v]:
                if hit < 0 or v < hit:
                    hit = v
                    hitd = level
                if stop_on_target:
                    continue
            xx, yy, z = decode(v, W, K)
            for dirn in range(6):
                u, t = step(src, L, W, K, v, xx, yy, z, dirn)
                if u < 0:
                    continue
                if use_allowed and allowed[u] == 0:
                    continue
                nd = level + t
                if nd < dist[u]:
                    if dist[u] == INF:
                        touched[nt] = u
                        nt += 1
                    dist[u] = nd
                    pdir[u] = dirn
                    if t == 0:
                        cur[nc] = u
                        nc += 1
                    else:
                        nxt[nn] = u
                        nn += 1
        if hit >= 0 and stop_on_target:
            return nt, hit, hitd
        level += 1
        for i in range(nn):
            cur[i] = nxt[i]
        nc = nn
    return nt, hit, hitd


@njit(cache=True)
def trace_back(v, pdir, W, K):
    """Vertices from a source to ``v`` following ``pdir`` (source first)."""
    out = [v]
    while pdir[v] >= 0:
        dirn = pdir[v]
        # step back along the reverse direction
        back = dirn ^ 1
        u, _, _ = neighbor(v, back, W, K)
        v = u
        out.append(v)
    out.reverse()
    return np.array(out, dtype=np.int64)


@njit(cache=True)
def profile01(src, L, k, origin, halfslab, boxes, points, order, dist, pdir, touched, cur, nxt):
    """Settle outwards from ``origin`` until every query is answered.

    ``halfslab`` and ``boxes`` must be sorted ascending. Returns
    ``(values, hits, n_touched)`` where ``values``/``hits`` concatenate the
    first-settled distance and vertex for ``{x >= halfslab[i]}``, for
    ``{max(|x|,|y|) >= boxes[i]}`` and for each vertex of ``points``.
    ``order`` lists the six directions in push order; zero-cost moves in the
    last one are explored first.
    """
    W = 2 * L + 1
    K = k + 1
    nb, ns, npt = halfslab.size, boxes.size, points.size
    nq = nb + ns + npt
    val = np.full(nq, -1, dtype=np.int64)
    hits = np.full(nq, -1, dtype=np.int64)
    remaining = nq
    bi = 0
    si = 0
    nt = 1
    touched[0] = origin
    dist[origin] = 0
    pdir[origin] = -1
    cur[0] = origin
    nc = 1
    level = 0
    while nc > 0 and remaining > 0:
        nn = 0
        while nc > 0 and remaining > 0:
            nc -= 1
            v = cur[nc]
            if dist[v] != level:
                continue
            xx, yy, z = decode(v, W, K)
            x = xx - L
            y = yy - L
            while bi < nb and x >= halfslab[bi]:
                val[bi] = level
                hits[bi] = v
                bi += 1
                remaining -= 1
            r = max(abs(x), abs(y))
            while si < ns and r >= boxes[si]:
                val[nb + si] = level
                hits[nb + si] = v
                si += 1
                remaining -= 1
            for i in range(npt):
                if points[i] == v and val[nb + ns + i] < 0:
                    val[nb + ns + i] = level
                    hits[nb + ns + i] = v
                    remaining -= 1
            for j in range(6):
                dirn = order[j]
                u, w = step(src, L, W, K, v, xx, yy, z, dirn)
                if u < 0:
                    continue
                nd = level + w
                if nd < dist[u]:
                    if dist[u] == INF:
                        touched[nt] = u
                        nt += 1
                    dist[u] = nd
                    pdir[u] = dirn
                    if w == 0:
                        cur[nc] = u
                        nc += 1
                    else:
                        nxt[nn] = u
                        nn += 1
        level += 1
        for i in range(nn):
            cur[i] = nxt[i]
        nc = nn
    return val, hits, nt


@njit(cache=True)
def bfs01_hops(src, L, k, sources, allowed, stop_set, n_stop, dist, hops, touched,
               qv, qh, sv, sh, tv, th):
    """0-1 BFS minimising ``(weight, hop count)`` lexicographically.

    Within a weight level, entries are merged in nondecreasing hop order from
    the zero-edge FIFO (``qv/qh``) and the seeds carried over from the previous
    level (``sv/sh``); unit edges feed the next level's seeds (``tv/th``).
    Stops once ``n_stop`` vertices flagged in ``stop_set`` are settled.
    """
    W = 2 * L + 1
    K = k + 1
    use_allowed = allowed.size > 0
    nt = 0
    ns = 0
    for i in range(sources.size):
        s = sources[i]
        if use_allowed and allowed[s] == 0:
            continue
        if dist[s] == INF:
            touched[nt] = s
            nt += 1
            dist[s] = 0
            hops[s] = 0
            sv[ns] = s
            sh[ns] = 0
            ns += 1
    settled_stop = 0
    level = 0
    while ns > 0:
        qhead = 0
        qtail = 0
        shead = 0
        nn = 0
        while qhead < qtail or shead < ns:
            if shead < ns and (qhead >= qtail or sh[shead] <= qh[qhead]):
                v = sv[shead]
                h = sh[shead]
                shead += 1
            else:
                v = qv[qhead]
                h = qh[qhead]
                qhead += 1
            if dist[v] != level or hops[v] != h:
                continue
            if stop_set.size > 0 and stop_set[v] == 1:
                stop_set[v] = 2
                settled_stop += 1
                if settled_stop >= n_stop:
                    return nt
            xx, yy, z = decode(v, W, K)
            for dirn in range(6):
                u, w = step(src, L, W, K, v, xx, yy, z, dirn)
                if u < 0:
                    continue
                if use_allowed and allowed[u] == 0:
                    continue
                nd = level + w
                nh = h + 1
                if nd < dist[u] or (nd == dist[u] and nh < hops[u]):
                    if dist[u] == INF:
                        touched[nt] = u
                        nt += 1
                    dist[u] = nd
                    hops[u] = nh
                    if w == 0:
                        qv[qtail] = u
                        qh[qtail] = nh
                        qtail += 1
                    else:
                        tv[nn] = u
                        th[nn] = nh
                        nn += 1
        level += 1
        for i in range(nn):
            sv[i] = tv[i]
            sh[i] = th[i]
        ns = nn
    return nt


@njit(cache=True)
def greedy_path(src, L, k, start, dist, hops):
    """Follow the smallest tight edge from ``start`` down to hop count zero."""
    W = 2 * L + 1
    K = k + 1
    n = hops[start]
    verts = np.empty(n + 1, dtype=np.int64)
    edges = np.empty(n, dtype=np.int64)
    verts[0] = start
    v = start
    for i in range(n):
        best_e = -1
        best_u = -1
        xx, yy, z = decode(v, W, K)
        for dirn in range(6):
            u, w = step(src, L, W, K, v, xx, yy, z, dirn)
            if u < 0 or dist[u] == INF:
                continue
            if w + dist[u] == dist[v] and hops[u] == hops[v] - 1:
                e = step_edge(W, K, xx, yy, z, dirn)
                if best_e < 0 or e < best_e:
                    best_e = e
                    best_u = u
        edges[i] = best_e
        verts[i + 1] = best_u
        v = best_u
    return verts, edges


@njit(cache=True)
def first_edge(src, L, k, v, dist, hops):
    """Smallest tight edge index leaving ``v`` (or -1 if ``v`` is terminal)."""
    W = 2 * L + 1
    K = k + 1
    best = -1
    if hops[v] == 0:
        return best
    xx, yy, z = decode(v, W, K)
    for dirn in range(6):
        u, w = step(src, L, W, K, v, xx, yy, z, dirn)
        if u < 0 or dist[u] == INF:
            continue
        if w + dist[u] == dist[v] and hops[u] == hops[v] - 1:
            e = step_edge(W, K, xx, yy, z, dirn)
            if best < 0 or e < best:
                best = e
    return best


@njit(inline="always", cache=True)
def _relax(src, L, W, K, v, level, order, dist, pdir, touched, nt, cur, nc, nxt, nn, other, best, meet):
    xx, yy, z = decode(v, W, K)
    for j in range(6):
        dirn = order[j]
        u, w = step(src, L, W, K, v, xx, yy, z, dirn)
        if u < 0:
            continue
        nd = level + w
        if nd < dist[u]:
            if dist[u] == INF:
                touched[nt] = u
                nt += 1
            dist[u] = nd
            pdir[u] = dirn
            if other[u] != INF and nd + other[u] < best:
                best = nd + other[u]
                meet = u
            if w == 0:
                cur[nc] = u
                nc += 1
            else:
                nxt[nn] = u
                nn += 1
    return nt, nc, nn, best, meet


@njit(cache=True)
def bidir01(src, L, k, a, b, oa, ob, da, pa, ta, ca, na, db, pb, tb, cb, nb):
    """Point-to-point 0-1 BFS grown from ``a`` and ``b`` in alternation.

    Once levels ``0..la`` are settled from ``a`` and ``0..lb`` from ``b``,
    every path of weight at most ``la + lb + 1`` has a vertex reached from
    both sides, so the best meeting value is exact as soon as it is at most
    ``la + lb + 2``. Sides advance one vertex at a time, the less explored
    side first; ``oa``/``ob`` are the direction push orders of each side.
    Returns ``(value, meet, n_touched_a, n_touched_b)``.
    """
    W = 2 * L + 1
    K = k + 1
    da[a] = 0
    pa[a] = -1
    ta[0] = a
    ca[0] = a
    nta, nca, nna, lva = 1, 1, 0, 0
    db[b] = 0
    pb[b] = -1
    tb[0] = b
    cb[0] = b
    ntb, ncb, nnb, lvb = 1, 1, 0, 0
    best = INF
    meet = -1
    if a == b:
        return 0, a, nta, ntb
    while best > lva + lvb:
        # lva - 1 and lvb - 1 are the fully settled levels
        if nca == 0:
            if nna == 0:
                break
            for i in range(nna):
                ca[i] = na[i]
            nca, nna = nna, 0
            lva += 1
            continue
        if ncb == 0:
            if nnb == 0:
                break
            for i in range(nnb):
                cb[i] = nb[i]
            ncb, nnb = nnb, 0
            lvb += 1
            continue
        if nta <= ntb:
            nca -= 1
            v = ca[nca]
            if da[v] == lva:
                nta, nca, nna, best, meet = _relax(src, L, W, K, v, lva, oa, da, pa, ta, nta, ca, nca, na, nna,
                                                   db, best, meet)
        else:
            ncb -= 1
            v = cb[ncb]
            if db[v] == lvb:
                ntb, ncb, nnb, best, meet = _relax(src, L, W, K, v, lvb, ob, db, pb, tb, ntb, cb, ncb, nb, nnb,
                                                   da, best, meet)
    return best, meet, nta, ntb
