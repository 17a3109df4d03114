"""Patch records on a tiled image and the neighbor graph between them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class PatchSetError(ValueError):
    """Raised for invalid patch sets or unreadable patch files."""


@dataclass(frozen=True)
class PatchRecord:
    id: int
    x: int
    y: int


@dataclass(frozen=True)
class PatchSet:
    """Patches of side ``patch_size`` with dense ids in canonical order."""

    patch_size: int
    records: tuple[PatchRecord, ...]

    def __post_init__(self):
        if self.patch_size <= 0:
            raise PatchSetError("patch size must be positive")
        if not self.records:
            raise PatchSetError("empty patch set")
        seen = set()
        for i, r in enumerate(self.records):
            if r.id != i:
                raise PatchSetError(f"record {i} has id {r.id}; ids must be dense 0..n-1")
            if r.x < 0 or r.y < 0:
                raise PatchSetError(f"record {i} has a negative coordinate")
            if (r.x, r.y) in seen:
                raise PatchSetError(f"duplicate coordinate ({r.x},{r.y})")
            seen.add((r.x, r.y))

    @classmethod
    def from_coords(cls, coords: Iterable[tuple[int, int]], patch_size: int) -> PatchSet:
        recs = tuple(PatchRecord(i, int(x), int(y)) for i, (x, y) in enumerate(coords))
        return cls(patch_size, recs)

    def __len__(self) -> int:
        return len(self.records)

    @cached_property
    def coords(self) -> np.ndarray:
        """``(n, 2)`` int64 array of ``(x, y)`` in id order."""
        return np.array([(r.x, r.y) for r in self.records], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class AdjacencyGraph:
    """Undirected simple graph; ``edge_array`` rows are ``(u, v)`` with ``u < v``, sorted."""

    n_vertices: int
    edge_array: np.ndarray = field(repr=False)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset(map(tuple, self.edge_array.tolist()))

    @property
    def n_edges(self) -> int:
        return int(self.edge_array.shape[0])

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` adjacency with each neighbor list sorted ascending."""
        n = self.n_vertices
        e = self.edge_array
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return indptr, dst.astype(np.int64)

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.diff(self.csr[0])

    def neighbors(self, v: int) -> np.ndarray:
        indptr, indices = self.csr
        return indices[indptr[v]:indptr[v + 1]]

    @classmethod
    def from_edges(cls, n_vertices: int, edges: Iterable[tuple[int, int]]) -> AdjacencyGraph:
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"edge ({u},{v}) out of range")
            pairs.add((min(u, v), max(u, v)))
        arr = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
        return cls(n_vertices, arr)


def generate_grid(rows: int, cols: int, p: int, mask=None, seed: int = 0) -> PatchSet:
    """Tile a ``rows x cols`` grid with patches of side ``p``.

    ``mask`` may be a boolean ``(rows, cols)`` array selecting surviving
    cells, or a float in ``(0, 1]`` giving the probability that each cell
    survives (drawn with ``seed``). Records come out row-major at
    ``(col * p, row * p)``.
    """
    if rows < 1 or cols < 1:
        raise PatchSetError("rows and cols must be >= 1")
    if mask is None:
        keep = np.ones((rows, cols), dtype=bool)
    elif isinstance(mask, float):
        keep = np.random.default_rng(seed).random((rows, cols)) < mask
    else:
        keep = np.asarray(mask, dtype=bool)
        if keep.shape != (rows, cols):
            raise PatchSetError(f"mask shape {keep.shape} != ({rows}, {cols})")
    r, c = np.nonzero(keep)
    if r.size == 0:
        raise PatchSetError("empty patch set")
    return PatchSet.from_coords(zip((c * p).tolist(), (r * p).tolist()), p)


def load_patches(path, p: int, irregular: bool = False) -> PatchSet:
    """Read an ``x,y`` per line patch list; ``#`` lines and blank lines are skipped."""
    coords = []
    seen = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        try:
            if len(parts) != 2:
                raise ValueError
            x, y = int(parts[0]), int(parts[1])
        except ValueError:
            raise PatchSetError(f"{path}:{lineno}: malformed record {raw!r}") from None
        if x < 0 or y < 0:
            raise PatchSetError(f"{path}:{lineno}: negative coordinate")
        if not irregular and (x % p or y % p):
            raise PatchSetError(f"{path}:{lineno}: coordinate ({x},{y}) is not a multiple of {p}")
        if (x, y) in seen:
            raise PatchSetError(
                f"{path}:{lineno}: duplicate coordinate ({x},{y}), first on line {seen[(x, y)]}")
        seen[(x, y)] = lineno
        coords.append((x, y))
    if not coords:
        raise PatchSetError(f"{path}: empty patch set")
    return PatchSet.from_coords(coords, p)


def write_patches(ps: PatchSet, path) -> None:
    lines = [f"# patch_size={ps.patch_size}"]
    lines += [f"{r.x},{r.y}" for r in ps.records]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mask(path) -> np.ndarray:
    """Read a mask file: one row per line of ``0``/``1`` cells, commas and spaces ignored."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.replace(",", "").replace(" ", "")
        if set(cells) - {"0", "1"}:
            raise PatchSetError(f"{path}:{lineno}: mask cells must be 0 or 1")
        rows.append([ch == "1" for ch in cells])
    if not rows or len({len(r) for r in rows}) != 1:
        raise PatchSetError(f"{path}: mask rows must be nonempty and equal length")
    return np.array(rows, dtype=bool)


# (dx, dy) offsets in units of p; each undirected edge is found once
_FORWARD = ((1, 0), (0, 1), (1, 1), (-1, 1))


def build_graph(ps: PatchSet) -> AdjacencyGraph:
    """King-move neighbor graph over the patch coordinates.

    Two patches are adjacent when they differ by exactly ``p`` along one
    axis and agree on the other, or differ by exactly ``p`` on both.
    """
    p = ps.patch_size
    index = {(r.x, r.y): r.id for r in ps.records}
    edges = []
    for r in ps.records:
        for dx, dy in _FORWARD:
            j = index.get((r.x + dx * p, r.y + dy * p))
            if j is not None:
                edges.append((r.id, j) if r.id < j else (j, r.id))
    arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    if arr.shape[0]:
        arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
    return AdjacencyGraph(len(ps), arr)


def build_graph_pairwise(ps: PatchSet) -> AdjacencyGraph:
    """O(n^2) reference construction, kept for cross-checking ``build_graph``."""
    p = ps.patch_size
    recs: Sequence[PatchRecord] = ps.records
    edges = []
    for i in range(len(recs)):
        for j in range(i + 1, len(recs)):
            dx = abs(recs[i].x - recs[j].x)
            dy = abs(recs[i].y - recs[j].y)
            if (dx == p and dy == 0) or (dx == 0 and dy == p) or (dx == p and dy == p):
                edges.append((i, j))
    return AdjacencyGraph.from_edges(len(recs), edges)
