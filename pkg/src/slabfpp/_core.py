"""Numba primitives shared by every kernel: edge hashing and weight lookup.

A weight source is the tuple ``(mode, packed, key, frozen, fresh_key, thresh)``:

* mode 0: weights read from the packed bit array ``packed``
* mode 1: weights hashed from ``key``
* mode 2: frozen edges read from ``packed``, the rest hashed from ``fresh_key``
* mode 3: frozen edges hashed from ``key``, the rest hashed from ``fresh_key``

An edge is open (``t = 0``) iff the top 53 bits of its hash are below
``thresh = round(p_zero * 2**53)``; a shared key therefore couples samples
monotonically across ``p_zero``.
"""
import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
M1 = np.uint64(0xBF58476D1CE4E5B9)
M2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
ONE = np.uint64(1)
GEO_OFFSET = 1 << 20

# neighbour directions: +z, -z, +x, -x, +y, -y
NDIR = 6


@njit(inline="always", cache=True)
def mix64(z):
    z = (z ^ (z >> S30)) * M1
    z = (z ^ (z >> S27)) * M2
    return z ^ (z >> S31)


@njit(inline="always", cache=True)
def hash_edge(key, g):
    return mix64(key + (g + ONE) * GOLDEN)


@njit(inline="always", cache=True)
def geo_key(x, y, z, d):
    gx = np.uint64(x + GEO_OFFSET)
    gy = np.uint64(y + GEO_OFFSET)
    return ((((gx << np.uint64(21)) | gy) << np.uint64(16) | np.uint64(z)) << np.uint64(2)) | np.uint64(d)


@njit(inline="always", cache=True)
def dense_edge(xx, yy, z, d, W, k):
    """Dense index of the edge owned by site (xx, yy) layer z, direction d."""
    K = k + 1
    hx = 1 if xx < W - 1 else 0
    hy = 1 if yy < W - 1 else 0
    hz = 1 if z < k else 0
    s = yy * W + xx
    pre = s * k + K * (yy * (W - 1) + xx) + K * (yy * W + (xx if yy < W - 1 else 0))
    if d == 0:
        rank = 0
    elif d == 1:
        rank = hz
    else:
        rank = hz + hx
    return pre + z * (1 + hx + hy) + rank


@njit(inline="always", cache=True)
def get_bit(packed, e):
    return (packed[e >> 3] >> (e & 7)) & 1


@njit(inline="always", cache=True)
def hashed_t(key, thresh, x, y, z, d):
    u = hash_edge(key, geo_key(x, y, z, d)) >> S11
    return 0 if u < thresh else 1


@njit(inline="always", cache=True)
def edge_t(src, L, W, k, xx, yy, z, d):
    """Passage time of the edge owned by (xx, yy, z) in direction d."""
    mode = src[0]
    if mode == 1:
        return hashed_t(src[2], src[5], xx - L, yy - L, z, d)
    e = dense_edge(xx, yy, z, d, W, k)
    if mode == 0:
        return np.int64(get_bit(src[1], e))
    if get_bit(src[3], e):
        if mode == 2:
            return np.int64(get_bit(src[1], e))
        return hashed_t(src[2], src[5], xx - L, yy - L, z, d)
    return hashed_t(src[4], src[5], xx - L, yy - L, z, d)


@njit(inline="always", cache=True)
def neighbor(v, dirn, W, K):
    """Neighbour of v in direction ``dirn`` and the owner/direction of the edge.

    Returns ``(u, owner, d)`` or ``(-1, -1, -1)`` when the step leaves the window.
    """
    z = v % K
    s = v // K
    xx = s % W
    yy = s // W
    if dirn == 0:
        if z + 1 < K:
            return v + 1, v, 0
    elif dirn == 1:
        if z > 0:
            return v - 1, v - 1, 0
    elif dirn == 2:
        if xx + 1 < W:
            return v + K, v, 1
    elif dirn == 3:
        if xx > 0:
            return v - K, v - K, 1
    elif dirn == 4:
        if yy + 1 < W:
            return v + K * W, v, 2
    else:
        if yy > 0:
            return v - K * W, v - K * W, 2
    return -1, -1, -1


@njit(inline="always", cache=True)
def owner_t(src, L, W, K, owner, d):
    z = owner % K
    s = owner // K
    return edge_t(src, L, W, K - 1, s % W, s // W, z, d)


@njit(inline="always", cache=True)
def owner_edge(W, K, owner, d):
    z = owner % K
    s = owner // K
    return dense_edge(s % W, s // W, z, d, W, K - 1)


@njit(cache=True)
def materialize(src, L, k):
    """Pack the weights of every edge in the window into little-endian bits."""
    W = 2 * L + 1
    K = k + 1
    E = W * W * k + 2 * W * (W - 1) * K
    out = np.zeros((E + 7) // 8, dtype=np.uint8)
    for yy in range(W):
        for xx in range(W):
            for z in range(K):
                for d in range(3):
                    if (d == 0 and z == k) or (d == 1 and xx == W - 1) or (d == 2 and yy == W - 1):
                        continue
                    if edge_t(src, L, W, k, xx, yy, z, d):
                        e = dense_edge(xx, yy, z, d, W, k)
                        out[e >> 3] |= np.uint8(1 << (e & 7))
    return out


@njit(cache=True)
def hash_stream(key, n):
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = hash_edge(key, np.uint64(i))
    return out


@njit(inline="always", cache=True)
def decode(v, W, K):
    s = v // K
    return s % W, s // W, v - s * K


@njit(inline="always", cache=True)
def step(src, L, W, K, v, xx, yy, z, dirn):
    """Neighbour of ``v = (xx, yy, z)`` in direction ``dirn`` and the edge weight.

    Directions: 0 +z, 1 -z, 2 +x, 3 -x, 4 +y, 5 -y. Returns ``(-1, 0)`` when
    the step leaves the window.
    """
    k = K - 1
    if dirn == 0:
        if z < k:
            return v + 1, edge_t(src, L, W, k, xx, yy, z, 0)
    elif dirn == 1:
        if z > 0:
            return v - 1, edge_t(src, L, W, k, xx, yy, z - 1, 0)
    elif dirn == 2:
        if xx + 1 < W:
            return v + K, edge_t(src, L, W, k, xx, yy, z, 1)
    elif dirn == 3:
        if xx > 0:
            return v - K, edge_t(src, L, W, k, xx - 1, yy, z, 1)
    elif dirn == 4:
        if yy + 1 < W:
            return v + K * W, edge_t(src, L, W, k, xx, yy, z, 2)
    else:
        if yy > 0:
            return v - K * W, edge_t(src, L, W, k, xx, yy - 1, z, 2)
    return -1, np.int64(0)


@njit(inline="always", cache=True)
def step_edge(W, K, xx, yy, z, dirn):
    """Dense index of the edge taken by :func:`step` (assumes it exists)."""
    k = K - 1
    if dirn == 0:
        return dense_edge(xx, yy, z, 0, W, k)
    if dirn == 1:
        return dense_edge(xx, yy, z - 1, 0, W, k)
    if dirn == 2:
        return dense_edge(xx, yy, z, 1, W, k)
    if dirn == 3:
        return dense_edge(xx - 1, yy, z, 1, W, k)
    if dirn == 4:
        return dense_edge(xx, yy, z, 2, W, k)
    return dense_edge(xx, yy - 1, z, 2, W, k)
