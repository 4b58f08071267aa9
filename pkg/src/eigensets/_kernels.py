"""Compiled inner loops for point-cloud pruning."""

import numba
import numpy as np


@numba.njit(cache=True)
def cell_extremes(proj, cells, ncells):
    """Mask of the per-cell maximizers of every projection column.

    Ties keep the lowest index, so the result depends only on the input order.
    """
    n, k = proj.shape
    best = np.full((ncells, k), -1, dtype=np.int64)
    for i in range(n):
        c = cells[i]
        for j in range(k):
            b = best[c, j]
            if b < 0 or proj[i, j] > proj[b, j]:
                best[c, j] = i
    keep = np.zeros(n, dtype=np.bool_)
    for c in range(ncells):
        for j in range(k):
            if best[c, j] >= 0:
                keep[best[c, j]] = True
    return keep


@numba.njit(cache=True)
def apply_maps(points, exps):
    """Images E_j x for every map and point, map-major: row j * n + i is E_j x_i."""
    n, d = points.shape
    m = exps.shape[0]
    out = np.empty((m * n, d))
    for j in range(m):
        for i in range(n):
            for r in range(d):
                acc = 0.0
                for c in range(d):
                    acc += exps[j, r, c] * points[i, c]
                out[j * n + i, r] = acc
    return out


@numba.njit(cache=True)
def cell_bounds(points, eps):
    n, d = points.shape
    inv = 1.0 / eps
    lo = np.empty(d, dtype=np.int64)
    hi = np.empty(d, dtype=np.int64)
    for r in range(d):
        lo[r] = np.iinfo(np.int64).max
        hi[r] = np.iinfo(np.int64).min
    for i in range(n):
        for r in range(d):
            k = np.int64(np.floor(points[i, r] * inv))
            if k < lo[r]:
                lo[r] = k
            if k > hi[r]:
                hi[r] = k
    return lo, hi


@numba.njit(cache=True)
def dense_extremes(points, eps, lo, span, dirs, offsets):
    """Per-cell representatives for cells indexed densely over lo .. lo + span - 1.

    Every occupied cell keeps its maximizer along dirs[0]. The maximizer along
    dirs[j] is kept as well when the neighbouring cell in the direction
    offsets[j] is empty, i.e. on the boundary of the occupied region.
    """
    n, d = points.shape
    k = dirs.shape[0]
    inv = 1.0 / eps
    ncells = 1
    for r in range(d):
        ncells *= span[r]
    best = np.full((ncells, k), -1, dtype=np.int64)
    score = np.empty((ncells, k))
    idx = np.empty(d, dtype=np.int64)
    for i in range(n):
        c = 0
        for r in range(d):
            c = c * span[r] + (np.int64(np.floor(points[i, r] * inv)) - lo[r])
        for j in range(k):
            v = 0.0
            for r in range(d):
                v += dirs[j, r] * points[i, r]
            if best[c, j] < 0 or v > score[c, j]:
                best[c, j] = i
                score[c, j] = v
    keep = np.zeros(n, dtype=np.bool_)
    for c in range(ncells):
        if best[c, 0] < 0:
            continue
        keep[best[c, 0]] = True
        rem = c
        for r in range(d - 1, -1, -1):
            idx[r] = rem % span[r]
            rem //= span[r]
        for j in range(1, k):
            nb = 0
            inside = True
            for r in range(d):
                q = idx[r] + offsets[j, r]
                if q < 0 or q >= span[r]:
                    inside = False
                    break
                nb = nb * span[r] + q
            if not inside or best[nb, 0] < 0:
                keep[best[c, j]] = True
    return keep


@numba.njit(cache=True)
def star_hull(points):
    """Convex hull vertices of planar points sorted by angle around an interior origin.

    Returns hull indices in counterclockwise order.
    """
    n = points.shape[0]
    start = 0
    best = -1.0
    for i in range(n):
        r = points[i, 0] ** 2 + points[i, 1] ** 2
        if r > best:
            best = r
            start = i
    stack = np.empty(n + 1, dtype=np.int64)
    top = 0
    stack[0] = start
    for s in range(1, n + 1):
        k = (start + s) % n
        while top >= 1:
            a = stack[top - 1]
            b = stack[top]
            cross = ((points[b, 0] - points[a, 0]) * (points[k, 1] - points[a, 1])
                     - (points[b, 1] - points[a, 1]) * (points[k, 0] - points[a, 0]))
            if cross > 0:
                break
            top -= 1
        top += 1
        stack[top] = k
    # the start point closes the loop and is listed twice
    return stack[:top].copy()
