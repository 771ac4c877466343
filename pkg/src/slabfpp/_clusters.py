"""Open-cluster reachability kernels (edges with ``t = 0`` only)."""
import numpy as np
from numba import njit

from ._core import decode, step


@njit(cache=True)
def crosses(src, L, k, x0, x1, y0, y1, vertical, seen, stack):
    """Open crossing of the box ``[x0,x1] x [y0,y1] x [0,k]``.

    Horizontal: from the face ``x = x0`` to ``x = x1``; vertical uses ``y``.
    ``seen`` is a uint8 scratch of length V, restored to zero on return.
    """
    W = 2 * L + 1
    K = k + 1
    top = 0
    lo = y0 if vertical else x0
    hi = y1 if vertical else x1
    a0, a1 = (x0, x1) if vertical else (y0, y1)
    for a in range(a0, a1 + 1):
        for z in range(K):
            if vertical:
                v = ((lo + L) * W + (a + L)) * K + z
            else:
                v = ((a + L) * W + (lo + L)) * K + z
            seen[v] = 1
            stack[top] = v
            top += 1
    found = False
    while top > 0:
        top -= 1
        v = stack[top]
        xx, yy, z = decode(v, W, K)
        c = yy - L if vertical else xx - L
        if c == hi:
            found = True
            break
        for dirn in range(6):
            # stay inside the box
            if dirn == 2 and xx - L >= x1 or dirn == 3 and xx - L <= x0:
                continue
            if dirn == 4 and yy - L >= y1 or dirn == 5 and yy - L <= y0:
                continue
            u, t = step(src, L, W, K, v, xx, yy, z, dirn)
            if u < 0 or seen[u]:
                continue
            if t == 0:
                seen[u] = 1
                stack[top] = u
                top += 1
    # clear scratch: everything marked lies in the box
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            base = ((y + L) * W + (x + L)) * K
            for z in range(K):
                seen[base + z] = 0
    return found


@njit(cache=True)
def open_components(src, L, k, allowed, label, stack):
    """Label open clusters inside ``allowed`` (uint8 mask); returns the count.

    ``label`` must be -1 on entry outside-or-unlabelled; vertices outside the
    mask keep -1.
    """
    W = 2 * L + 1
    K = k + 1
    V = W * W * K
    nlab = 0
    for s in range(V):
        if allowed[s] == 0 or label[s] >= 0:
            continue
        label[s] = nlab
        top = 0
        stack[top] = s
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            xx, yy, z = decode(v, W, K)
            for dirn in range(6):
                u, t = step(src, L, W, K, v, xx, yy, z, dirn)
                if u < 0 or allowed[u] == 0 or label[u] >= 0:
                    continue
                if t == 0:
                    label[u] = nlab
                    stack[top] = u
                    top += 1
        nlab += 1
    return nlab
