"""Budget-constrained (cost, makespan) assignment per split and the 3D Pareto front."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .grid import PatchSet, build_graph
from .hybridcloud import InstanceSpec, TimeEstimate, Workload, estimate_times
from .labelcrypt import decrypt_labels, encrypt_subset, output_utility
from .privrisk import RiskReport, assess
from .seeds import derive_seed
from .splitting import AVG_KINDS, GRAPH_KINDS, Partition, SplitStrategy, split

log = logging.getLogger(__name__)

F1_TOL = 1e-9


class InfeasibleError(ValueError):
    """More sub-datasets than instances."""


@dataclass(frozen=True)
class Assignment:
    """Instance id per dataset index; no instance is used twice."""

    instances: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.instances)) != len(self.instances):
            raise ValueError("an instance may receive at most one dataset")

    @property
    def mapping(self) -> dict[int, str]:
        return dict(enumerate(self.instances))

    def used(self, catalog: Sequence[InstanceSpec]) -> np.ndarray:
        chosen = set(self.instances)
        return np.array([inst.id in chosen for inst in catalog], dtype=bool)

    def encode(self) -> str:
        return ";".join(f"d{d}:{k}" for d, k in enumerate(self.instances))

    @classmethod
    def decode(cls, text: str) -> Assignment:
        if not text:
            return cls(())
        pairs = [item.split(":", 1) for item in text.split(";")]
        return cls(tuple(k for _, k in sorted(pairs, key=lambda p: int(p[0][1:]))))


@dataclass(frozen=True)
class BiPoint:
    cost: float
    makespan: float
    assignment: Assignment


@dataclass(frozen=True)
class CandidateSolution:
    strategy: str
    N: int
    f1: float
    f2: float
    f3: float
    assignment: Assignment

    @property
    def family(self) -> str:
        return "avg" if self.strategy.split(":")[0] in AVG_KINDS else "graph"

    @property
    def objectives(self) -> tuple[float, float, float]:
        return (self.f1, self.f2, self.f3)


@dataclass(frozen=True)
class ParetoSet:
    solutions: tuple[CandidateSolution, ...]

    def __len__(self) -> int:
        return len(self.solutions)


def time_matrix(sizes: Sequence[int], catalog: Sequence[InstanceSpec],
                workload: Workload) -> dict[tuple[int, str], TimeEstimate]:
    return {(d, inst.id): estimate_times(int(n), inst, workload)
            for d, n in enumerate(sizes) for inst in catalog}


def _matrices(sizes, catalog, workload):
    times = time_matrix(sizes, catalog, workload)
    t = np.array([[times[d, inst.id].total for inst in catalog] for d in range(len(sizes))])
    price = np.array([inst.price for inst in catalog])
    return t, t / 3600.0 * price


def _frontier(points: Iterable[BiPoint]) -> list[BiPoint]:
    """(cost, makespan)-nondominated points, cheapest first.

    Points with equal objectives collapse to the lexicographically smallest
    assignment.
    """
    best: dict[tuple[float, float], BiPoint] = {}
    for pt in points:
        key = (pt.cost, pt.makespan)
        if key not in best or pt.assignment.instances < best[key].assignment.instances:
            best[key] = pt
    out = []
    fastest = math.inf
    for key in sorted(best):
        if key[1] < fastest:
            out.append(best[key])
            fastest = key[1]
    return out


def biobjective_solve(sizes: Sequence[int], catalog: Sequence[InstanceSpec], workload: Workload,
                      budget: float) -> list[BiPoint]:
    """Exact (cost, makespan) frontier of one-dataset-per-instance assignments under ``budget``.

    ``sizes`` are the sub-dataset sizes (a :class:`Partition` is accepted
    too). For every distinct pair completion time ``eps`` the cheapest
    perfect matching using only pairs finishing within ``eps`` is found;
    the cheapest point at each attainable makespan is on the frontier when
    nothing cheaper finishes sooner.
    """
    if isinstance(sizes, Partition):
        sizes = sizes.sizes.tolist()
    n, m = len(sizes), len(catalog)
    if n > m:
        raise InfeasibleError(f"{n} sub-datasets but only {m} instances")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    t, c = _matrices(sizes, catalog, workload)
    ids = [inst.id for inst in catalog]
    found = []
    for eps in np.unique(t):
        masked = np.where(t <= eps, c, np.inf)
        cols, ok = _kernels.min_cost_assignment(masked)
        if not ok:
            continue
        cost = math.fsum(c[d, cols[d]] for d in range(n))
        if cost > budget:
            continue
        makespan = float(max(t[d, cols[d]] for d in range(n)))
        found.append(BiPoint(cost, makespan, Assignment(tuple(ids[j] for j in cols))))
    return _frontier(found)


def pareto_filter_3d(candidates: Sequence[CandidateSolution]) -> ParetoSet:
    """Keep every candidate no other candidate dominates; exact ties all survive."""
    if not candidates:
        return ParetoSet(())
    pts = np.array([c.objectives for c in candidates], dtype=float)
    keep = _kernels.nondominated_mask(pts, F1_TOL)
    return ParetoSet(tuple(c for c, k in zip(candidates, keep) if k))


@dataclass
class StrategyResult:
    strategy: SplitStrategy
    partition: Partition
    risk: RiskReport
    encrypted: list = field(default_factory=list)
    utility: list = field(default_factory=list)
    frontier: list[BiPoint] = field(default_factory=list)


@dataclass
class PlanResult:
    pool: list[CandidateSolution]
    front: ParetoSet
    per_strategy: list[StrategyResult]

    def family_pool(self, family: str) -> list[CandidateSolution]:
        return [c for c in self.pool if c.family == family]


def expand_strategies(strategies: Iterable[SplitStrategy | str],
                      graph_ns: Iterable[int] = ()) -> list[SplitStrategy]:
    """Resolve strategy names; bare ``avg_*`` kinds take every N the graph strategies produced."""
    out = []
    ns = sorted(set(graph_ns))
    for s in strategies:
        if isinstance(s, str):
            name, _, n = s.strip().partition(":")
            if name in AVG_KINDS and not n:
                if not ns:
                    raise ValueError(f"{name} needs :N when no graph strategy is run")
                out.extend(SplitStrategy(name, k) for k in ns)
                continue
            s = SplitStrategy(name, int(n) if n else None)
        out.append(s)
    return list(dict.fromkeys(out))


def candidates_for(label: str, n: int, f1: float, frontier: Sequence[BiPoint]):
    return [CandidateSolution(label, n, f1, pt.cost, pt.makespan, pt.assignment)
            for pt in frontier]


def run_splits(strategies: Sequence[SplitStrategy | str], ps: PatchSet, g,
               seed: int = 0) -> list[Partition]:
    """Split under graph strategies first, then average splits (bare ``avg_*`` take their Ns)."""
    names = [s if isinstance(s, str) else s.label for s in strategies]
    graph_names = [s for s in names if s.split(":")[0] in GRAPH_KINDS]
    other_names = [s for s in names if s.split(":")[0] not in GRAPH_KINDS]
    parts = [split(ps, g, s, derive_seed(seed, "split", s.label))
             for s in expand_strategies(graph_names)]
    graph_ns = [p.N for p in parts]
    parts += [split(ps, g, s, derive_seed(seed, "split", s.label))
              for s in expand_strategies(other_names, graph_ns)]
    return parts


def encrypt_partition(part: Partition, ps: PatchSet, k: int = 2, seed: int = 0):
    """Encrypt every class of ``part``.

    Returns ``(encrypted, decrypted, utility)``: per class the
    ``(EncryptedLabelSet, EigenBasis, NormStats)`` triple, the decrypted
    coordinates in record order, and the per-axis output utility.
    """
    encrypted, decrypted, utility = [], [], []
    for c, members in enumerate(part.classes):
        ids = np.array(members, dtype=np.int64)
        coords = ps.coords[ids]
        enc, basis, stats = encrypt_subset(
            ids, coords, ps.patch_size, k, derive_seed(seed, "encrypt", part.strategy.label, str(c)))
        est = decrypt_labels(enc, basis, stats)
        encrypted.append((enc, basis, stats))
        decrypted.append(est)
        utility.append(output_utility(coords[_rank(ids, enc.patch_ids)], est))
    return encrypted, decrypted, utility


def plan(strategies: Sequence[SplitStrategy | str], ps: PatchSet,
         catalog: Sequence[InstanceSpec], workload: Workload, budget: float,
         seed: int = 0, k: int = 2) -> PlanResult:
    """Split, perturb, score and schedule under every strategy, then take the 3D front."""
    if not strategies:
        raise ValueError("no split strategies given")
    results = []
    pool = []
    for part in run_splits(strategies, ps, build_graph(ps), seed):
        encrypted, decrypted, utility = encrypt_partition(part, ps, k, seed)
        res = StrategyResult(part.strategy, part, assess(part, ps, decrypted), encrypted, utility)
        res.frontier = biobjective_solve(part.sizes.tolist(), catalog, workload, budget)
        if not res.frontier:
            log.warning("%s: no assignment fits budget %s", part.strategy.label, budget)
        pool.extend(candidates_for(part.strategy.label, part.N, res.risk.averages[2],
                                   res.frontier))
        results.append(res)
    return PlanResult(pool, pareto_filter_3d(pool), results)


def _rank(ids: np.ndarray, record_ids: np.ndarray) -> np.ndarray:
    """Row positions in ``ids`` of each entry of ``record_ids``."""
    order = np.argsort(ids)
    return order[np.searchsorted(ids, record_ids, sorter=order)]


CANDIDATES_HEADER = "strategy,N,f1_bits,f2_cost,f3_seconds,is_pareto,assignment"


def write_candidates(pool: Sequence[CandidateSolution], front: ParetoSet, path) -> None:
    on_front = {id(c) for c in front.solutions}
    lines = [CANDIDATES_HEADER]
    for c in pool:
        lines.append(f"{c.strategy},{c.N},{c.f1!r},{c.f2!r},{c.f3!r},"
                     f"{int(id(c) in on_front)},{c.assignment.encode()}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_candidates(path) -> list[tuple[CandidateSolution, bool]]:
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    if lines[0].strip() != CANDIDATES_HEADER:
        raise ValueError(f"{path}: not a candidates file")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        f = line.split(",")
        if len(f) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 fields")
        cand = CandidateSolution(f[0], int(f[1]), float(f[2]), float(f[3]), float(f[4]),
                                 Assignment.decode(f[6]))
        out.append((cand, f[5] == "1"))
    return out
