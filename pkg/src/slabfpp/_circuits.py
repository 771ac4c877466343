"""Numba kernels for circuits in slab annuli and for radial cut counts.

Kernels work in a local frame of radius ``M`` around the origin: site
``s = (y + M) * G + (x + M)`` with ``G = 2M + 1`` and vertex ``v = s*K + z``.
Edge flags are stored per owner vertex as ``flag[3*v + d]`` with ``d`` 0 (+z),
1 (+x), 2 (+y). Faces are indexed by their lower-left site ``(i, j)`` as
``f = j * (G - 1) + i``.

The winding cut is the ray ``{(x, 1/2): x > 0}``: the plane edge from
``(x, 0)`` to ``(x, 1)`` with ``x >= 1`` crosses it upwards.
"""
import numpy as np
from numba import njit

from ._core import dense_edge, edge_t

# neighbour order -y, -x, -z, +z, +x, +y is increasing global edge index
LEX_DIRS = np.array([5, 3, 1, 0, 2, 4], dtype=np.int64)


@njit(cache=True)
def annulus_flags(src, L, k, M, inner, outer):
    """Edge states of the annulus ``inner < r <= outer`` in a frame of radius ``M``.

    Returns uint8 flags: 0 absent, 1 open (t=0), 2 closed (t=1). Edges are
    present only when both endpoints lie in the annulus.
    """
    G = 2 * M + 1
    K = k + 1
    W = 2 * L + 1
    flag = np.zeros(3 * G * G * K, dtype=np.uint8)
    for ly in range(G):
        y = ly - M
        for lx in range(G):
            x = lx - M
            r = max(abs(x), abs(y))
            if r <= inner or r > outer:
                continue
            rx = max(abs(x + 1), abs(y))
            ry = max(abs(x), abs(y + 1))
            okx = lx + 1 < G and inner < rx <= outer
            oky = ly + 1 < G and inner < ry <= outer
            base = (ly * G + lx) * K
            for z in range(K):
                v = base + z
                if z < k:
                    flag[3 * v] = 1 + edge_t(src, L, W, k, x + L, y + L, z, 0)
                if okx:
                    flag[3 * v + 1] = 1 + edge_t(src, L, W, k, x + L, y + L, z, 1)
                if oky:
                    flag[3 * v + 2] = 1 + edge_t(src, L, W, k, x + L, y + L, z, 2)
    return flag


@njit(inline="always", cache=True)
def _nbr(v, dirn, G, K, ops):
    """Neighbour through an edge whose flag is 1 in ``ops``, else -1.

    Returns ``(u, crossing)`` with the signed crossing of the winding cut.
    """
    M = (G - 1) // 2
    if dirn == 0:
        if ops[3 * v] == 1:
            return v + 1, 0
    elif dirn == 1:
        if v % K > 0 and ops[3 * (v - 1)] == 1:
            return v - 1, 0
    elif dirn == 2:
        if ops[3 * v + 1] == 1:
            return v + K, 0
    elif dirn == 3:
        if v >= K and ops[3 * (v - K) + 1] == 1:
            return v - K, 0
    elif dirn == 4:
        if ops[3 * v + 2] == 1:
            s = v // K
            c = 1 if (s // G == M and s % G > M) else 0
            return v + G * K, c
    else:
        u = v - G * K
        if u >= 0 and ops[3 * u + 2] == 1:
            s = u // K
            c = -1 if (s // G == M and s % G > M) else 0
            return u, c
    return -1, 0


@njit(cache=True)
def winding_components(G, K, ops, label, par, queue):
    """Label open components (flag 1 edges) and flag those with odd winding.

    ``label`` must be -1 on entry. ``par`` receives the sheet parity of each
    vertex in its component's BFS tree. Returns the per-component flags.
    """
    n = G * G * K
    flags = np.zeros(n, dtype=np.uint8)
    nc = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        label[s] = nc
        par[s] = 0
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            v = queue[head]
            head += 1
            for i in range(6):
                u, c = _nbr(v, LEX_DIRS[i], G, K, ops)
                if u < 0:
                    continue
                pu = (par[v] + c) & 1
                if label[u] < 0:
                    label[u] = nc
                    par[u] = pu
                    queue[tail] = u
                    tail += 1
                elif par[u] != pu:
                    flags[nc] = 1
        nc += 1
    return flags[:nc]


@njit(cache=True)
def restrict_to_winding(ops, label, flags):
    """Copy of ``ops`` keeping only open edges of odd-winding components."""
    out = ops.copy()
    n = ops.size // 3
    for v in range(n):
        if flags[label[v]] == 0:
            for d in range(3):
                if out[3 * v + d] == 1:
                    out[3 * v + d] = 2
    return out


@njit(cache=True)
def extract_circuit(G, K, ops, root, sheet, parent, queue):
    """BFS from ``root`` over flag-1 edges tracking the integer sheet.

    Stops at the first edge closing a cycle of winding +-1 and returns its
    simple vertex cycle (starting at the branch point) and winding; returns an
    empty cycle if none exists in ``root``'s component. ``sheet`` must hold
    a sentinel (``-2**62``) on entry and is restored before returning.
    """
    UNSEEN = -(1 << 62)
    sheet[root] = 0
    parent[root] = -1
    head = 0
    tail = 1
    queue[0] = root
    cyc = np.empty(0, dtype=np.int64)
    wind = 0
    found = False
    while head < tail and not found:
        v = queue[head]
        head += 1
        for i in range(6):
            u, c = _nbr(v, LEX_DIRS[i], G, K, ops)
            if u < 0 or u == parent[v]:
                continue
            su = sheet[v] + c
            if sheet[u] == UNSEEN:
                sheet[u] = su
                parent[u] = v
                queue[tail] = u
                tail += 1
            elif sheet[u] - su == 1 or sheet[u] - su == -1:
                # tree paths v -> lca and u -> lca form a simple cycle
                a = v
                b = u
                da = 0
                db = 0
                x = a
                while x >= 0:
                    da += 1
                    x = parent[x]
                x = b
                while x >= 0:
                    db += 1
                    x = parent[x]
                pa = np.empty(da, dtype=np.int64)
                pb = np.empty(db, dtype=np.int64)
                x = a
                for t in range(da):
                    pa[t] = x
                    x = parent[x]
                x = b
                for t in range(db):
                    pb[t] = x
                    x = parent[x]
                # strip the common tail beyond the lowest common ancestor
                ia = da - 1
                ib = db - 1
                while ia > 0 and ib > 0 and pa[ia - 1] == pb[ib - 1]:
                    ia -= 1
                    ib -= 1
                # cycle: lca -> ... -> v, v -> u, u -> ... -> (child of lca)
                m = ia + 1 + ib
                cyc = np.empty(m, dtype=np.int64)
                for t in range(ia + 1):
                    cyc[t] = pa[ia - t]
                for t in range(ib):
                    cyc[ia + 1 + t] = pb[t]
                wind = su - sheet[u]
                found = True
                break
    for t in range(tail):
        sheet[queue[t]] = UNSEEN
    return cyc, wind


@njit(cache=True)
def cycle_winding(G, K, cyc):
    """Signed winding of a closed vertex cycle around the origin."""
    M = (G - 1) // 2
    w = 0
    n = cyc.size
    for t in range(n):
        a = cyc[t]
        b = cyc[(t + 1) % n]
        sa = a // K
        sb = b // K
        if sa // G == M and sb // G == M + 1 and sa % G > M and sa % G == sb % G:
            w += 1
        elif sb // G == M and sa // G == M + 1 and sb % G > M and sa % G == sb % G:
            w -= 1
    return w


@njit(cache=True)
def face_winding(G, K, cyc):
    """Winding number of the projected cycle around every face centre."""
    F = G - 1
    acc = np.zeros((F, G), dtype=np.int64)
    n = cyc.size
    for t in range(n):
        sa = cyc[t] // K
        sb = cyc[(t + 1) % n] // K
        xa, ya = sa % G, sa // G
        xb, yb = sb % G, sb // G
        if xa == xb and yb == ya + 1:
            acc[ya, xa] += 1
        elif xa == xb and ya == yb + 1:
            acc[yb, xa] -= 1
    out = np.zeros(F * F, dtype=np.int64)
    for j in range(F):
        run = 0
        for x in range(G - 1, 0, -1):
            run += acc[j, x]
            # faces (i, j) with i < x see this column to their right
            out[j * F + x - 1] = run
    return out


@njit(cache=True)
def grow_forced(G, K, ops, inner):
    """Faces whose winding is nonzero for every surrounding circuit.

    Starts from the faces inside ``S(inner)`` and crosses any face side that
    carries no flag-1 edge in any layer. Returns ``(mask, escaped)``; an
    escape to the frame border proves that no surrounding circuit exists.
    """
    M = (G - 1) // 2
    F = G - 1
    mask = np.zeros(F * F, dtype=np.uint8)
    queue = np.empty(F * F, dtype=np.int64)
    tail = 0
    for j in range(F):
        for i in range(F):
            x0, y0 = i - M, j - M
            if max(abs(x0), abs(x0 + 1)) <= inner and max(abs(y0), abs(y0 + 1)) <= inner:
                mask[j * F + i] = 1
                queue[tail] = j * F + i
                tail += 1
    head = 0
    while head < tail:
        f = queue[head]
        head += 1
        i = f % F
        j = f // F
        if i == 0 or j == 0 or i == F - 1 or j == F - 1:
            return mask, True
        for side in range(4):
            if side == 0:  # bottom: +x edge at (i, j)
                s, d, g = j * G + i, 1, f - F
            elif side == 1:  # top: +x edge at (i, j+1)
                s, d, g = (j + 1) * G + i, 1, f + F
            elif side == 2:  # left: +y edge at (i, j)
                s, d, g = j * G + i, 2, f - 1
            else:  # right: +y edge at (i+1, j)
                s, d, g = j * G + i + 1, 2, f + 1
            if mask[g]:
                continue
            blocked = False
            for z in range(K):
                if ops[3 * (s * K + z) + d] == 1:
                    blocked = True
                    break
            if not blocked:
                mask[g] = 1
                queue[tail] = g
                tail += 1
    return mask, False


@njit(cache=True)
def closure_flags(G, K, ops, faces):
    """Restrict flag-1 edges to the closed union of the faces in ``faces``."""
    F = G - 1
    out = np.zeros_like(ops)
    site = np.zeros(G * G, dtype=np.uint8)
    for f in range(F * F):
        if faces[f] == 0:
            continue
        i = f % F
        j = f // F
        s = j * G + i
        site[s] = 1
        site[s + 1] = 1
        site[s + G] = 1
        site[s + G + 1] = 1
        for z in range(K):
            for e in ((s, 1), (s + G, 1), (s, 2), (s + 1, 2)):
                v = e[0] * K + z
                if ops[3 * v + e[1]] == 1:
                    out[3 * v + e[1]] = 1
    for s in range(G * G):
        if site[s]:
            for z in range(K):
                v = s * K + z
                if ops[3 * v] == 1:
                    out[3 * v] = 1
    return out


@njit(cache=True)
def cycle_plane_usage(G, K, cyc, used):
    """Count (in ``used[3*s + d]``) how often the cycle's projection runs along each plane edge."""
    n = cyc.size
    for t in range(n):
        a = cyc[t]
        b = cyc[(t + 1) % n]
        lo = min(a, b)
        hi = max(a, b)
        diff = hi - lo
        s = lo // K
        if diff == K:
            used[3 * s + 1] += 1
        elif diff == G * K:
            used[3 * s + 2] += 1


@njit(inline="always", cache=True)
def _side(f, F, G, side):
    """Plane edge slot ``(site, d)`` and opposite face of side ``side`` of face ``f``."""
    i = f % F
    j = f // F
    if side == 0:
        return j * G + i, 1, f - F
    if side == 1:
        return (j + 1) * G + i, 1, f + F
    if side == 2:
        return j * G + i, 2, f - 1
    return j * G + i + 1, 2, f + 1


@njit(inline="always", cache=True)
def _site_ok(s, G, phi):
    """Site ``s`` is a corner of some face in ``phi``."""
    F = G - 1
    i = s % G
    j = s // G
    for dj in range(2):
        for di in range(2):
            a = i - di
            b = j - dj
            if 0 <= a < F and 0 <= b < F and phi[b * F + a]:
                return True
    return False


@njit(inline="always", cache=True)
def _plane_ok(s, d, G, phi):
    """Plane edge owned by site ``s`` in direction ``d`` is a side of a face in ``phi``."""
    F = G - 1
    i = s % G
    j = s // G
    if d == 1:
        if i < F and j < F and phi[j * F + i]:
            return True
        if i < F and j >= 1 and phi[(j - 1) * F + i]:
            return True
    else:
        if i < F and j < F and phi[j * F + i]:
            return True
        if i >= 1 and j < F and phi[j * F + i - 1]:
            return True
    return False


@njit(cache=True)
def _local_path(G, K, ops, phi, a, b, onc, cx, cy, rad, stamp, mark, parent, queue):
    """BFS from ``a`` to ``b`` through the closure of ``phi`` near ``(cx, cy)``.

    Vertices with ``onc`` set (the rest of the current cycle) are avoided.
    Returns the path from ``a`` to ``b`` or an empty array.
    """
    mark[a] = stamp
    parent[a] = -1
    head = 0
    tail = 1
    queue[0] = a
    while head < tail:
        v = queue[head]
        head += 1
        if v == b:
            n = 0
            x = v
            while x >= 0:
                n += 1
                x = parent[x]
            out = np.empty(n, dtype=np.int64)
            x = v
            for t in range(n - 1, -1, -1):
                out[t] = x
                x = parent[x]
            return out
        for i in range(6):
            dirn = LEX_DIRS[i]
            u, c = _nbr(v, dirn, G, K, ops)
            if u < 0 or mark[u] == stamp:
                continue
            if onc[u] and u != b:
                continue
            su = u // K
            if abs(su % G - cx) > rad or abs(su // G - cy) > rad:
                continue
            if dirn >= 2:
                o = v if dirn % 2 == 0 else u
                if not _plane_ok(o // K, dirn // 2, G, phi):
                    continue
            elif not _site_ok(su, G, phi):
                continue
            mark[u] = stamp
            parent[u] = v
            queue[tail] = u
            tail += 1
    return np.empty(0, dtype=np.int64)


@njit(cache=True)
def _global_circuit(G, K, ops, phi, label, par, queue, sheet, parent):
    sub = closure_flags(G, K, ops, phi)
    for t in range(label.size):
        label[t] = -1
    flags = winding_components(G, K, sub, label, par, queue)
    for v in range(label.size):
        if flags[label[v]] and (sub[3 * v] == 1 or sub[3 * v + 1] == 1 or sub[3 * v + 2] == 1):
            cyc, w = extract_circuit(G, K, sub, v, sheet, parent, queue)
            if cyc.size:
                return cyc
    return np.empty(0, dtype=np.int64)


@njit(cache=True)
def peel(G, K, ops, forced, start_faces, start_cyc, label, par, queue, sheet, parent,
         local_radius, global_limit):
    """Shrink a face region from outside while a surrounding circuit survives.

    Boundary faces outside ``forced`` are visited in queue order (initially by
    face index). A face is removed when the closed union of the remaining
    faces still carries a surrounding circuit: the current circuit is kept if
    it avoids the face's outer sides, otherwise it is rerouted through a
    breadth-first search within ``local_radius`` of the face, and failing
    that searched for globally when the frame has at most ``global_limit``
    vertices. Faces that cannot be removed are locked. Returns the final
    circuit and face region.
    """
    F = G - 1
    n = G * G * K
    phi = start_faces.copy()
    locked = forced.copy()
    used = np.zeros(3 * n, dtype=np.int64)
    onc = np.zeros(n, dtype=np.uint8)
    mark = np.zeros(n, dtype=np.int64)
    lpar = np.empty(n, dtype=np.int64)
    lq = np.empty(n, dtype=np.int64)
    stamp = 0
    cyc = start_cyc
    cycle_plane_usage(G, K, cyc, used)
    for t in range(cyc.size):
        onc[cyc[t]] = 1
    inq = np.zeros(F * F, dtype=np.uint8)
    fq = np.empty(8 * F * F + 8, dtype=np.int64)
    head = 0
    tail = 0
    for f in range(F * F):
        if phi[f] and not locked[f]:
            fq[tail] = f
            tail += 1
            inq[f] = 1
    while head < tail:
        f = fq[head]
        head += 1
        inq[f] = 0
        if phi[f] == 0 or locked[f]:
            continue
        boundary = False
        touches = False
        for side in range(4):
            s, d, g = _side(f, F, G, side)
            if phi[g] == 0:
                boundary = True
                if used[3 * s + d] > 0:
                    touches = True
        if not boundary:
            continue
        phi[f] = 0
        if touches:
            new = np.empty(0, dtype=np.int64)
            m = cyc.size
            # cycle positions whose vertex or outgoing edge leaves the shrunk closure
            bad = np.zeros(m, dtype=np.uint8)
            nbad = 0
            for t in range(m):
                a = cyc[t]
                b = cyc[(t + 1) % m]
                sa = a // K
                if not _site_ok(sa, G, phi):
                    bad[t] = 1
                lo = min(a, b)
                diff = max(a, b) - lo
                if diff != 1:
                    dd = 1 if diff == K else 2
                    if not _plane_ok(lo // K, dd, G, phi):
                        bad[t] = 1
                        bad[(t + 1) % m] = bad[(t + 1) % m] | 2
                nbad += bad[t] > 0
            if 0 < nbad < m:
                # shortest cyclic window [i, j] covering every bad position
                first = -1
                gap_len = -1
                gap_start = -1
                # find the longest run of good positions; its complement is the window
                t0 = 0
                while bad[t0] == 0:
                    t0 += 1
                run = 0
                for q in range(1, m + 1):
                    t = (t0 + q) % m
                    if bad[t] == 0:
                        run += 1
                        if run > gap_len:
                            gap_len = run
                            gap_start = (t - run + 1) % m
                    else:
                        run = 0
                if gap_len >= 2:
                    # the window runs from just after the good run back to its start
                    a_pos = (gap_start + gap_len - 1) % m
                    b_pos = gap_start
                    av = cyc[a_pos]
                    bv = cyc[b_pos]
                    win = m - gap_len
                    if win <= 4 * local_radius:
                        for t in range(m):
                            onc[cyc[t]] = 0
                        for q in range(gap_len):
                            onc[cyc[(gap_start + q) % m]] = 1
                        stamp += 1
                        ci = f % F
                        cj = f // F
                        path = _local_path(G, K, ops, phi, av, bv, onc, ci, cj, local_radius,
                                           stamp, mark, lpar, lq)
                        for t in range(m):
                            onc[cyc[t]] = 0
                        if path.size >= 2:
                            cand = np.empty(gap_len + path.size - 2, dtype=np.int64)
                            for q in range(gap_len):
                                cand[q] = cyc[(gap_start + q) % m]
                            for q in range(1, path.size - 1):
                                cand[gap_len + q - 1] = path[q]
                            if cand.size >= 4:
                                w = cycle_winding(G, K, cand)
                                if w == 1 or w == -1:
                                    new = cand
                        for t in range(m):
                            onc[cyc[t]] = 1
            if new.size == 0 and n <= global_limit:
                new = _global_circuit(G, K, ops, phi, label, par, queue, sheet, parent)
            if new.size == 0:
                phi[f] = 1
                locked[f] = 1
                continue
            for t in range(cyc.size):
                onc[cyc[t]] = 0
            used[:] = 0
            cyc = new
            cycle_plane_usage(G, K, cyc, used)
            for t in range(cyc.size):
                onc[cyc[t]] = 1
        for side in range(4):
            s, d, g = _side(f, F, G, side)
            if phi[g] and not locked[g] and not inq[g]:
                fq[tail] = g
                tail += 1
                inq[g] = 1
    return cyc, phi


@njit(cache=True)
def local_to_global(cyc, G, K, L):
    """Global vertex indices of local frame vertices."""
    M = (G - 1) // 2
    W = 2 * L + 1
    out = np.empty(cyc.size, dtype=np.int64)
    for t in range(cyc.size):
        v = cyc[t]
        s = v // K
        z = v - s * K
        x = s % G - M
        y = s // G - M
        out[t] = ((y + L) * W + (x + L)) * K + z
    return out


@njit(cache=True)
def cycle_edges(gcyc, L, K):
    """Dense global edge indices along a closed global vertex cycle."""
    W = 2 * L + 1
    k = K - 1
    n = gcyc.size
    out = np.empty(n, dtype=np.int64)
    for t in range(n):
        a = gcyc[t]
        b = gcyc[(t + 1) % n]
        lo = min(a, b)
        hi = max(a, b)
        s = lo // K
        z = lo - s * K
        xx = s % W
        yy = s // W
        diff = hi - lo
        d = 0 if diff == 1 else (1 if diff == K else 2)
        out[t] = dense_edge(xx, yy, z, d, W, k)
    return out


# --- radial cuts ------------------------------------------------------------

@njit(cache=True)
def ring_weights(src, L, k, r_in, r_out):
    """Edge weights of the closed annulus ``r_in <= r <= r_out`` (frame ``M = r_out``).

    Returns uint8 flags: 0 absent, 1 open, 2 closed.
    """
    M = r_out
    G = 2 * M + 1
    K = k + 1
    W = 2 * L + 1
    flag = np.zeros(3 * G * G * K, dtype=np.uint8)
    for ly in range(G):
        y = ly - M
        for lx in range(G):
            x = lx - M
            if max(abs(x), abs(y)) < r_in:
                continue
            okx = lx + 1 < G and max(abs(x + 1), abs(y)) >= r_in
            oky = ly + 1 < G and max(abs(x), abs(y + 1)) >= r_in
            base = (ly * G + lx) * K
            for z in range(K):
                v = base + z
                if z < k:
                    flag[3 * v] = 1 + edge_t(src, L, W, k, x + L, y + L, z, 0)
                if okx:
                    flag[3 * v + 1] = 1 + edge_t(src, L, W, k, x + L, y + L, z, 1)
                if oky:
                    flag[3 * v + 2] = 1 + edge_t(src, L, W, k, x + L, y + L, z, 2)
    return flag


@njit(inline="always", cache=True)
def _wnbr(v, dirn, G, K, wt):
    """Neighbour and weight through a present edge, else ``(-1, 0)``."""
    if dirn == 0:
        f = wt[3 * v]
        if f:
            return v + 1, f - 1
    elif dirn == 1:
        if v % K > 0:
            f = wt[3 * (v - 1)]
            if f:
                return v - 1, f - 1
    elif dirn == 2:
        f = wt[3 * v + 1]
        if f:
            return v + K, f - 1
    elif dirn == 3:
        if v >= K:
            f = wt[3 * (v - K) + 1]
            if f:
                return v - K, f - 1
    elif dirn == 4:
        f = wt[3 * v + 2]
        if f:
            return v + G * K, f - 1
    else:
        u = v - G * K
        if u >= 0:
            f = wt[3 * u + 2]
            if f:
                return u, f - 1
    return -1, 0


@njit(cache=True)
def ring_distances(G, K, wt, r_in, cut):
    """0-1 BFS from the inner boundary ``r = r_in`` of the ring.

    Edges whose owner slot is flagged in ``cut`` (if non-empty) are removed.
    Returns the distance array (-1 outside the ring or unreachable).
    """
    M = (G - 1) // 2
    n = G * G * K
    dist = np.full(n, -1, dtype=np.int64)
    cur = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    use_cut = cut.size > 0
    nc = 0
    for ly in range(G):
        for lx in range(G):
            if max(abs(lx - M), abs(ly - M)) == r_in:
                for z in range(K):
                    v = (ly * G + lx) * K + z
                    dist[v] = 0
                    cur[nc] = v
                    nc += 1
    level = 0
    while nc > 0:
        nn = 0
        while nc > 0:
            nc -= 1
            v = cur[nc]
            if dist[v] != level:
                continue
            for dirn in range(6):
                u, w = _wnbr(v, dirn, G, K, wt)
                if u < 0:
                    continue
                if use_cut:
                    o = v if dirn % 2 == 0 else u
                    if cut[3 * o + (dirn // 2)]:
                        continue
                nd = level + w
                if dist[u] < 0 or nd < dist[u]:
                    dist[u] = nd
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
    return dist


@njit(cache=True)
def outer_min(G, K, dist, r_out):
    M = (G - 1) // 2
    best = -1
    for ly in range(G):
        for lx in range(G):
            if max(abs(lx - M), abs(ly - M)) == r_out:
                for z in range(K):
                    d = dist[(ly * G + lx) * K + z]
                    if d >= 0 and (best < 0 or d < best):
                        best = d
    return best


@njit(cache=True)
def level_cut_slots(G, K, wt, dist, level):
    """Owner slots of closed edges joining distance ``level-1`` to ``level``."""
    n = G * G * K
    cut = np.zeros(3 * n, dtype=np.uint8)
    for v in range(n):
        if dist[v] < 0:
            continue
        for d in range(3):
            if wt[3 * v + d] != 2:
                continue
            if d == 0:
                u = v + 1
            elif d == 1:
                u = v + K
            else:
                u = v + G * K
            if dist[u] < 0:
                continue
            a = dist[v]
            b = dist[u]
            if (a == level - 1 and b == level) or (b == level - 1 and a == level):
                cut[3 * v + d] = 1
    return cut
