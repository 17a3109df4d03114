"""Pure-numpy implementations of the hot loops.

Every function here has a twin in ``_numba`` with the same signature and the
same tie-breaking, so results are identical between backends.
"""

import numpy as np


def greedy_color_order(indptr, indices, order):
    """Color vertices in ``order`` with the smallest color absent among colored neighbors."""
    n = indptr.shape[0] - 1
    colors = np.full(n, -1, dtype=np.int64)
    for v in order:
        nbr = colors[indices[indptr[v]:indptr[v + 1]]]
        nbr = nbr[nbr >= 0]
        taken = np.zeros(nbr.shape[0] + 1, dtype=bool)
        taken[nbr[nbr <= nbr.shape[0]]] = True
        colors[v] = int(np.argmin(taken))
    return colors


def dsatur(indptr, indices):
    """DSATUR coloring; max saturation, then max degree, then lowest id."""
    n = indptr.shape[0] - 1
    deg = np.diff(indptr).astype(np.int64)
    max_deg = int(deg.max()) if n else 0
    colors = np.full(n, -1, dtype=np.int64)
    sat = np.zeros(n, dtype=np.int64)
    seen = np.zeros((n, max_deg + 2), dtype=bool)
    key = deg.copy()
    for _ in range(n):
        v = int(np.argmax(key))
        c = int(np.argmin(seen[v]))
        colors[v] = c
        key[v] = -1
        nb = indices[indptr[v]:indptr[v + 1]]
        nb = nb[colors[nb] < 0]
        fresh = nb[~seen[nb, c]]
        seen[fresh, c] = True
        sat[fresh] += 1
        key[fresh] = sat[fresh] * (max_deg + 1) + deg[fresh]
    return colors


def smallest_last_order(indptr, indices):
    """Matula-Beck order: repeatedly strip a minimum-degree vertex, then reverse."""
    n = indptr.shape[0] - 1
    deg = np.diff(indptr).astype(np.int64)
    removed = np.zeros(n, dtype=bool)
    big = n + 1
    work = deg.copy()
    stripped = np.empty(n, dtype=np.int64)
    for step in range(n):
        v = int(np.argmin(work))
        stripped[step] = v
        removed[v] = True
        work[v] = big
        nb = indices[indptr[v]:indptr[v + 1]]
        nb = nb[~removed[nb]]
        work[nb] -= 1
    return stripped[::-1].copy()


def min_cost_assignment(cost):
    """Minimum-cost matching of every row to a distinct column.

    Successive shortest augmenting paths with Dijkstra-style potentials on a
    dense ``(n, m)`` matrix, ``n <= m``. ``inf`` marks a forbidden pair.
    Returns ``(assignment, ok)``; ``ok`` is False when no perfect matching
    of the rows exists.
    """
    n, m = cost.shape
    a = np.full((n + 1, m + 1), np.inf)
    a[1:, 1:] = cost
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    p = np.zeros(m + 1, dtype=np.int64)
    way = np.zeros(m + 1, dtype=np.int64)
    cols = np.arange(m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            with np.errstate(invalid="ignore"):
                cur = a[i0] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            cand = np.where(free, minv, np.inf)
            j1 = int(np.argmin(cand))
            delta = cand[j1]
            if not np.isfinite(delta):
                return np.full(n, -1, dtype=np.int64), False
            u[p[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assignment = np.full(n, -1, dtype=np.int64)
    rows = p[1:]
    hit = rows > 0
    assignment[rows[hit] - 1] = cols[1:][hit] - 1
    return assignment, True


def nondominated_mask(points, f1_tol):
    """Flag rows of ``points`` (n, 3) not dominated by any other row (minimization).

    The first objective is compared with an absolute tolerance ``f1_tol``;
    the remaining objectives exactly.
    """
    n = points.shape[0]
    keep = np.ones(n, dtype=bool)
    if n == 0:
        return keep
    f1 = points[:, 0]
    rest = points[:, 1:]
    chunk = 512
    for lo in range(0, n, chunk):
        b = slice(lo, min(n, lo + chunk))
        # a (rows of the full set) against b (columns of this block)
        le1 = f1[:, None] <= f1[None, b] + f1_tol
        lt1 = f1[:, None] < f1[None, b] - f1_tol
        le = np.all(rest[:, None, :] <= rest[None, b, :], axis=2)
        lt = np.any(rest[:, None, :] < rest[None, b, :], axis=2)
        dom = le1 & le & (lt1 | lt)
        keep[b] = ~dom.any(axis=0)
    return keep
