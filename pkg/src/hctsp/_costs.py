"""Compiled edge-cost primitives.

Every cost in the package goes through these functions: the dense matrices,
the scalar Python API and the search kernels. Keeping one code path makes
TSPLIB rounding identical everywhere.
"""

import math

import numpy as np
from numba import njit

# cost kinds, in the order used by ``TspInstance.kind_code``
EUCLID2D = 0
GEOGRAPHIC = 1
EXPLICIT = 2

# model modes understood by ``model_cost``
MODE_ORIGINAL = 0
MODE_HC = 1
MODE_POWER = 2

GEO_PI = 3.141592
GEO_RADIUS = 6378.388


def geo_radians(coords):
    """Convert TSPLIB ``DDD.MM`` coordinates to radians (TSPLIB's own PI)."""
    coords = np.asarray(coords, dtype=np.float64)
    deg = np.trunc(coords)
    minutes = coords - deg
    return GEO_PI * (deg + 5.0 * minutes / 3.0) / 180.0


@njit(cache=True, inline="always")
def base_cost(i, j, dmat, pts, ckind):
    """Original cost of edge (i, j).

    ``dmat`` is either a dense table or an empty (0, 0) array, in which case
    the cost is computed from ``pts`` (raw coordinates for EUC_2D, radians
    for GEO).
    """
    if dmat.shape[0] > 0:
        return dmat[i, j]
    if i == j:
        return 0.0
    if ckind == EUCLID2D:
        dx = pts[i, 0] - pts[j, 0]
        dy = pts[i, 1] - pts[j, 1]
        return math.floor(math.sqrt(dx * dx + dy * dy) + 0.5)
    q1 = math.cos(pts[i, 1] - pts[j, 1])
    q2 = math.cos(pts[i, 0] - pts[j, 0])
    q3 = math.cos(pts[i, 0] + pts[j, 0])
    arg = 0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)
    return float(int(GEO_RADIUS * math.acos(arg) + 1.0))


@njit(cache=True, inline="always")
def model_cost(i, j, mode, dmat, pts, ckind, rank, chord, lam, cmin, crange, cbar, expo):
    """Edge cost under a search model.

    mode 0: original cost; mode 1: homotopic blend with the circle chords
    indexed by rank separation; mode 2: power smoothing of min-max
    normalised costs around their mean ``cbar`` with exponent ``expo``.
    """
    c = base_cost(i, j, dmat, pts, ckind)
    if mode == MODE_ORIGINAL:
        return c
    if mode == MODE_HC:
        n = rank.shape[0]
        d = rank[i] - rank[j]
        if d < 0:
            d = -d
        if 2 * d > n:
            d = n - d
        return (1.0 - lam) * c + lam * chord[d]
    if i == j:
        return 0.0
    x = (c - cmin) / crange
    if x >= cbar:
        return cbar + (x - cbar) ** expo
    return cbar - (cbar - x) ** expo


@njit(cache=True)
def dense_matrix(n, pts, ckind):
    empty = np.empty((0, 0), dtype=np.float64)
    out = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        out[i, i] = 0.0
        for j in range(i + 1, n):
            c = base_cost(i, j, empty, pts, ckind)
            out[i, j] = c
            out[j, i] = c
    return out


@njit(cache=True)
def cost_rows(rows, n, dmat, pts, ckind):
    """Original costs from each city in ``rows`` to every city."""
    out = np.empty((rows.shape[0], n), dtype=np.float64)
    for a in range(rows.shape[0]):
        i = rows[a]
        for j in range(n):
            out[a, j] = base_cost(i, j, dmat, pts, ckind)
    return out


@njit(cache=True)
def order_cost(order, mode, dmat, pts, ckind, rank, chord, lam, cmin, crange, cbar, expo):
    n = order.shape[0]
    total = 0.0
    prev = order[n - 1]
    for p in range(n):
        cur = order[p]
        total += model_cost(prev, cur, mode, dmat, pts, ckind, rank, chord, lam,
                            cmin, crange, cbar, expo)
        prev = cur
    return total


@njit(cache=True)
def edge_stats(n, dmat, pts, ckind):
    """Min, max and mean original cost over all unordered pairs i < j."""
    lo = np.inf
    hi = -np.inf
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            c = base_cost(i, j, dmat, pts, ckind)
            if c < lo:
                lo = c
            if c > hi:
                hi = c
            total += c
    return lo, hi, total / (n * (n - 1) / 2)
