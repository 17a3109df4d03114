"""Numba-compiled twins of the kernels in ``_numpy``."""

import heapq

import numpy as np
from numba import njit


@njit(cache=True)
def greedy_color_order(indptr, indices, order):
    n = indptr.shape[0] - 1
    colors = np.full(n, -1, dtype=np.int64)
    mark = np.full(n + 1, -1, dtype=np.int64)
    for v in order:
        for e in range(indptr[v], indptr[v + 1]):
            c = colors[indices[e]]
            if c >= 0:
                mark[c] = v
        c = 0
        while mark[c] == v:
            c += 1
        colors[v] = c
    return colors


@njit(cache=True)
def dsatur(indptr, indices):
    # lazy-deletion heap of (-key, id): stale entries are skipped on pop
    n = indptr.shape[0] - 1
    deg = np.empty(n, dtype=np.int64)
    max_deg = 0
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] > max_deg:
            max_deg = deg[v]
    colors = np.full(n, -1, dtype=np.int64)
    key = deg.copy()
    seen = np.zeros((n, max_deg + 2), dtype=np.bool_)
    heap = [(-key[v], np.int64(v)) for v in range(n)]
    heapq.heapify(heap)
    while heap:
        k, best = heapq.heappop(heap)
        if colors[best] >= 0 or -k != key[best]:
            continue
        c = 0
        while seen[best, c]:
            c += 1
        colors[best] = c
        for e in range(indptr[best], indptr[best + 1]):
            u = indices[e]
            if colors[u] < 0 and not seen[u, c]:
                seen[u, c] = True
                key[u] += max_deg + 1
                heapq.heappush(heap, (-key[u], np.int64(u)))
    return colors


@njit(cache=True)
def smallest_last_order(indptr, indices):
    n = indptr.shape[0] - 1
    work = np.empty(n, dtype=np.int64)
    for v in range(n):
        work[v] = indptr[v + 1] - indptr[v]
    removed = np.zeros(n, dtype=np.bool_)
    stripped = np.empty(n, dtype=np.int64)
    heap = [(work[v], np.int64(v)) for v in range(n)]
    heapq.heapify(heap)
    step = 0
    while heap:
        d, best = heapq.heappop(heap)
        if removed[best] or d != work[best]:
            continue
        stripped[step] = best
        step += 1
        removed[best] = True
        for e in range(indptr[best], indptr[best + 1]):
            u = indices[e]
            if not removed[u]:
                work[u] -= 1
                heapq.heappush(heap, (work[u], np.int64(u)))
    return stripped[::-1].copy()


@njit(cache=True)
def min_cost_assignment(cost):
    n, m = cost.shape
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    minv = np.empty(m + 1)
    used = np.empty(m + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = -1
            for j in range(1, m + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            if j1 < 0 or not np.isfinite(delta):
                return np.full(n, -1, dtype=np.int64), False
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        if p[j] > 0:
            assignment[p[j] - 1] = j - 1
    return assignment, True


@njit(cache=True)
def nondominated_mask(points, f1_tol):
    n = points.shape[0]
    keep = np.ones(n, dtype=np.bool_)
    for b in range(n):
        for a in range(n):
            if a == b:
                continue
            if points[a, 0] > points[b, 0] + f1_tol:
                continue
            if points[a, 1] > points[b, 1] or points[a, 2] > points[b, 2]:
                continue
            if (points[a, 0] < points[b, 0] - f1_tol
                    or points[a, 1] < points[b, 1]
                    or points[a, 2] < points[b, 2]):
                keep[b] = False
                break
    return keep
