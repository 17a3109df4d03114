"""Split a patch set into sub-datasets by greedy graph coloring or even chunking."""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels
from .grid import AdjacencyGraph, PatchSet

GRAPH_KINDS = (
    "largest_first",
    "random_sequential",
    "smallest_last",
    "independent_set",
    "connected_sequential",
    "saturation_largest_first",
)
AVG_KINDS = ("avg_shuffled", "avg_unshuffled")
ALL_KINDS = GRAPH_KINDS + AVG_KINDS


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitStrategy:
    kind: str
    requested_n: int | None = None

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise SplitError(f"unknown split strategy {self.kind!r}")
        if self.requested_n is not None and self.requested_n < 1:
            raise SplitError("requested N must be >= 1")
        if self.kind in AVG_KINDS and self.requested_n is None:
            raise SplitError(f"{self.kind} needs an explicit N")

    @property
    def family(self) -> str:
        return "avg" if self.kind in AVG_KINDS else "graph"

    @property
    def label(self) -> str:
        """Stable name used in file names and reports, e.g. ``avg_shuffled:5``."""
        if self.kind in AVG_KINDS:
            return f"{self.kind}:{self.requested_n}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> SplitStrategy:
        name, _, n = text.strip().partition(":")
        return cls(name, int(n) if n else None)


@dataclass(frozen=True, eq=False)
class Partition:
    """Class label per patch id; class ids are dense ``0..N-1``."""

    strategy: SplitStrategy
    labels: np.ndarray = field(repr=False)

    @cached_property
    def classes(self) -> tuple[tuple[int, ...], ...]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(np.bincount(self.labels))[:-1]
        return tuple(tuple(c.tolist()) for c in np.split(order, bounds))

    @property
    def N(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.N)

    @classmethod
    def from_classes(cls, strategy: SplitStrategy, classes, n: int) -> Partition:
        labels = np.full(n, -1, dtype=np.int64)
        for c, members in enumerate(classes):
            members = np.asarray(list(members), dtype=np.int64)
            if np.any(labels[members] >= 0):
                raise SplitError("classes overlap")
            labels[members] = c
        if np.any(labels < 0):
            raise SplitError("classes do not cover every patch")
        return cls(strategy, labels)


def _bfs_order(g: AdjacencyGraph) -> np.ndarray:
    indptr, indices = g.csr
    seen = np.zeros(g.n_vertices, dtype=bool)
    order = []
    for root in range(g.n_vertices):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        while queue:
            v = queue.popleft()
            order.append(v)
            for u in indices[indptr[v]:indptr[v + 1]]:
                if not seen[u]:
                    seen[u] = True
                    queue.append(int(u))
    return np.array(order, dtype=np.int64)


def _independent_set_classes(g: AdjacencyGraph) -> np.ndarray:
    """Peel maximal independent sets off the remaining graph, one color each.

    Each set is built by deleting a maximum-degree vertex of the candidate
    subgraph until it has no edges, then re-adding deleted vertices (lowest
    id first) that still have no neighbor in the set.
    """
    indptr, indices = g.csr
    n = g.n_vertices
    colors = np.full(n, -1, dtype=np.int64)
    color = 0
    while True:
        remaining = np.flatnonzero(colors < 0)
        if remaining.size == 0:
            break
        cand = np.zeros(n, dtype=bool)
        cand[remaining] = True
        deg = np.zeros(n, dtype=np.int64)
        for v in remaining:
            nb = indices[indptr[v]:indptr[v + 1]]
            deg[v] = int(cand[nb].sum())
        heap = [(-int(deg[v]), int(v)) for v in remaining if deg[v] > 0]
        heapq.heapify(heap)
        while heap:
            d, v = heapq.heappop(heap)
            if not cand[v] or -d != deg[v] or deg[v] == 0:
                continue
            cand[v] = False
            for u in indices[indptr[v]:indptr[v + 1]]:
                if cand[u]:
                    deg[u] -= 1
                    if deg[u] > 0:
                        heapq.heappush(heap, (-int(deg[u]), int(u)))
        chosen = cand.copy()
        for v in remaining:
            if not chosen[v]:
                nb = indices[indptr[v]:indptr[v + 1]]
                if not chosen[nb].any():
                    chosen[v] = True
        colors[chosen] = color
        color += 1
    return colors


def greedy_color(g: AdjacencyGraph, strategy: SplitStrategy, seed: int = 0) -> Partition:
    """Color ``g`` with one of the six sequential strategies; ties go to the lowest id."""
    if strategy.kind not in GRAPH_KINDS:
        raise SplitError(f"{strategy.kind} is not a graph-coloring strategy")
    if g.n_vertices == 0:
        raise SplitError("cannot color an empty graph")
    indptr, indices = g.csr
    kind = strategy.kind
    if kind == "saturation_largest_first":
        colors = _kernels.dsatur(indptr, indices)
    elif kind == "independent_set":
        colors = _independent_set_classes(g)
    else:
        if kind == "largest_first":
            order = np.argsort(-g.degrees, kind="stable")
        elif kind == "random_sequential":
            order = np.random.default_rng(seed).permutation(g.n_vertices)
        elif kind == "smallest_last":
            order = _kernels.smallest_last_order(indptr, indices)
        else:
            order = _bfs_order(g)
        colors = _kernels.greedy_color_order(indptr, indices, order.astype(np.int64))
    return Partition(strategy, np.asarray(colors, dtype=np.int64))


def average_split(ps: PatchSet, n: int, shuffled: bool, seed: int = 0) -> Partition:
    """Chunk the patches into ``n`` classes whose sizes differ by at most one."""
    total = len(ps)
    if n < 1 or n > total:
        raise SplitError(f"cannot split {total} patches into {n} classes")
    order = np.random.default_rng(seed).permutation(total) if shuffled else np.arange(total)
    base, extra = divmod(total, n)
    sizes = [base + (1 if c < extra else 0) for c in range(n)]
    labels = np.empty(total, dtype=np.int64)
    labels[order] = np.repeat(np.arange(n), sizes)
    kind = "avg_shuffled" if shuffled else "avg_unshuffled"
    return Partition(SplitStrategy(kind, n), labels)


def split(ps: PatchSet, g: AdjacencyGraph, strategy: SplitStrategy, seed: int = 0) -> Partition:
    if strategy.kind in AVG_KINDS:
        return average_split(ps, strategy.requested_n, strategy.kind == "avg_shuffled", seed)
    return greedy_color(g, strategy, seed)


def validate_partition(g: AdjacencyGraph, part: Partition) -> list[tuple[int, int]]:
    """Edges of ``g`` whose endpoints share a class; empty means the coloring is proper."""
    if part.labels.shape[0] != g.n_vertices:
        raise SplitError("partition does not match graph size")
    e = g.edge_array
    bad = part.labels[e[:, 0]] == part.labels[e[:, 1]]
    return [tuple(pair) for pair in e[bad].tolist()]


def write_partition(part: Partition, path) -> None:
    """``patch_id,class_id`` per line under a ``# strategy=`` header."""
    body = "".join(f"{i},{c}\n" for i, c in enumerate(part.labels.tolist()))
    Path(path).write_text(f"# strategy={part.strategy.label}\n" + body)


def read_partition(path, n_patches: int | None = None) -> Partition:
    strategy = None
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if line.startswith("# strategy="):
            strategy = SplitStrategy.parse(line.split("=", 1)[1])
            continue
        if not line or line.startswith("#"):
            continue
        try:
            i, c = (int(v) for v in line.split(","))
        except ValueError:
            raise SplitError(f"{path}:{lineno}: expected patch_id,class_id") from None
        pairs.append((i, c))
    if strategy is None:
        raise SplitError(f"{path}: missing '# strategy=' header")
    n = n_patches if n_patches is not None else len(pairs)
    labels = np.full(n, -1, dtype=np.int64)
    for i, c in pairs:
        if not 0 <= i < n or labels[i] >= 0:
            raise SplitError(f"{path}: bad or repeated patch id {i}")
        labels[i] = c
    if np.any(labels < 0):
        raise SplitError(f"{path}: partition does not cover every patch")
    if not np.array_equal(np.unique(labels), np.arange(labels.max() + 1)):
        raise SplitError(f"{path}: class ids must be dense 0..N-1")
    return Partition(strategy, labels)
