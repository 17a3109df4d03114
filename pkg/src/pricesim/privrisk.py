"""Plug-in entropy and mutual information, and per-node minimal privacy risk.

All quantities are in bits. Probabilities come from integer counts, so the
only floating point work is inside ``log2`` and the final sums.

Risk model
----------
A patch ``U`` is drawn uniformly from the whole patch set. For honest node
``i`` the private variable is ``U``'s coordinate on one axis when ``i``
owns ``U`` and a blank symbol otherwise; the adversary, holding every other
node, sees the coordinate exactly when ``i`` does not own ``U``. The minimal
risk of ``i`` is the mutual information between those two variables. The
adversary's decrypted estimates are a function of data it already holds and
add nothing to that quantity.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .grid import PatchSet
from .splitting import Partition, SplitStrategy

PROB_TOL = 1e-9
AXES = {"x": 0, "y": 1}


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteDist:
    support: tuple
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.support) != len(self.probs):
            raise DistributionError("support and probs differ in length")
        if len(set(self.support)) != len(self.support):
            raise DistributionError("support entries must be unique")
        if any(p < 0 for p in self.probs):
            raise DistributionError("negative probability")
        if abs(math.fsum(self.probs) - 1.0) > PROB_TOL:
            raise DistributionError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")

    @classmethod
    def from_samples(cls, samples: Sequence[Hashable]) -> DiscreteDist:
        counts: dict = defaultdict(int)
        for s in samples:
            counts[s] += 1
        n = len(samples)
        return cls(tuple(counts), tuple(c / n for c in counts.values()))


@dataclass(frozen=True)
class JointDist:
    table: Mapping[tuple[Hashable, Hashable], float]

    def __post_init__(self):
        if any(p < 0 for p in self.table.values()):
            raise DistributionError("negative probability")
        total = math.fsum(self.table.values())
        if abs(total - 1.0) > PROB_TOL:
            raise DistributionError(f"joint probabilities sum to {total!r}, not 1")

    def marginal(self, axis: int) -> DiscreteDist:
        acc: dict = defaultdict(list)
        for key, p in self.table.items():
            acc[key[axis]].append(p)
        return DiscreteDist(tuple(acc), tuple(math.fsum(v) for v in acc.values()))


def _h(probs) -> float:
    return -math.fsum(p * math.log2(p) for p in probs if p > 0)


def entropy(d: DiscreteDist) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    return _h(d.probs) + 0.0


def joint_entropy(j: JointDist) -> float:
    return _h(j.table.values()) + 0.0


def conditional_entropy(j: JointDist) -> float:
    """``H(S | Z)`` as the ``p(z)``-weighted entropy of each conditional slice."""
    slices: dict = defaultdict(list)
    for (s, z), p in j.table.items():
        if p > 0:
            slices[z].append(p)
    terms = []
    for ps in slices.values():
        pz = math.fsum(ps)
        terms.append(pz * _h(p / pz for p in ps))
    return math.fsum(terms)


def mutual_information(j: JointDist) -> float:
    """``I(S; Z) = H(S) - H(S | Z)`` for the joint table keyed ``(s, z)``.

    Rounding can leave a negative residue of order 1e-16 for independent
    variables; it is clipped to zero.
    """
    return max(0.0, entropy(j.marginal(0)) - conditional_entropy(j))


def entropy_counts(counts) -> float:
    """Entropy in bits of the empirical distribution given by nonnegative integer counts."""
    c = np.asarray(counts, dtype=np.int64)
    c = c[c > 0]
    n = int(c.sum())
    if n == 0:
        raise DistributionError("no observations")
    # H = log2 n - sum c log2 c / n
    return max(0.0, math.log2(n) - math.fsum((c * np.log2(c)).tolist()) / n)


def mutual_information_samples(s, z) -> float:
    """Plug-in ``I(S; Z)`` from paired samples (any hashable-by-numpy values)."""
    s = np.asarray(s)
    z = np.asarray(z)
    if s.shape[0] != z.shape[0]:
        raise DistributionError("sample arrays differ in length")
    _, s_codes = np.unique(s, return_inverse=True, axis=0 if s.ndim > 1 else None)
    _, z_codes = np.unique(z, return_inverse=True, axis=0 if z.ndim > 1 else None)
    return _mi_codes(s_codes.ravel(), z_codes.ravel())


def _mi_codes(s_codes: np.ndarray, z_codes: np.ndarray) -> float:
    # H(S) - H(S|Z); H(S|Z) = H(S,Z) - H(Z). Deterministic S given Z gives exactly H(S).
    ks = int(s_codes.max()) + 1
    pair = z_codes.astype(np.int64) * ks + s_codes
    _, joint = np.unique(pair, return_counts=True)
    _, zc = np.unique(z_codes, return_counts=True)
    _, sc = np.unique(s_codes, return_counts=True)
    if joint.shape[0] == zc.shape[0]:
        return entropy_counts(sc)
    return max(0.0, entropy_counts(sc) + entropy_counts(zc) - entropy_counts(joint))


def node_channel_counts(owner: np.ndarray, values: np.ndarray, node: int) -> np.ndarray:
    """Joint counts of (private symbol, adversary symbol) for ``node``.

    Symbols are value indices ``0..K-1`` plus ``K`` for blank. Returns a
    ``(K + 1, K + 1)`` count matrix indexed ``[private, adversary]``.
    """
    uniq, code = np.unique(values, return_inverse=True)
    k = uniq.shape[0]
    mine = owner == node
    s = np.where(mine, code, k)
    v = np.where(mine, k, code)
    return np.bincount(s * (k + 1) + v, minlength=(k + 1) ** 2).reshape(k + 1, k + 1)


def _mi_from_table(table: np.ndarray) -> float:
    h_joint = entropy_counts(table.ravel())
    h_s = entropy_counts(table.sum(axis=1))
    h_v = entropy_counts(table.sum(axis=0))
    return max(0.0, h_s + h_v - h_joint)


def min_privacy_risk(part: Partition, ps: PatchSet, decrypted=None, axis: str = "x") -> np.ndarray:
    """Minimal privacy risk in bits for every node when the other ``N - 1`` collude.

    ``decrypted``, when given, is the per-node list of decrypted coordinate
    matrices; it is checked for alignment with ``part`` but, being derived
    from the colluders' own data, does not change the result.
    """
    if axis not in AXES:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    owner = part.labels
    if owner.shape[0] != len(ps):
        raise ValueError("partition does not match the patch set")
    n_nodes = part.N
    if decrypted is not None:
        if len(decrypted) != n_nodes:
            raise ValueError("need one decrypted matrix per node")
        for c, (members, est) in enumerate(zip(part.classes, decrypted)):
            if np.shape(est)[0] != len(members):
                raise ValueError(f"decrypted matrix for node {c} has wrong row count")
    if n_nodes == 1:
        return np.zeros(1)
    values = ps.coords[:, AXES[axis]]
    return np.array([_mi_from_table(node_channel_counts(owner, values, i))
                     for i in range(n_nodes)])


@dataclass(frozen=True)
class RiskReport:
    strategy: SplitStrategy
    N: int
    per_node: tuple[tuple[int, float, float], ...]
    averages: tuple[float, float, float]
    std_devs: tuple[float, float]

    def row(self) -> str:
        ax, ay, total = self.averages
        sx, sy = self.std_devs
        return f"{self.strategy.label},{self.N},{ax!r},{sx!r},{ay!r},{sy!r},{total!r}"


def _sample_std(v: np.ndarray) -> float:
    return float(np.std(v, ddof=1)) if v.shape[0] > 1 else 0.0


def average_min_risk(strategy: SplitStrategy, rho_x, rho_y) -> RiskReport:
    """Mean and sample standard deviation of per-node risk on each axis, plus their sum."""
    rx = np.asarray(rho_x, dtype=float)
    ry = np.asarray(rho_y, dtype=float)
    if rx.size == 0 or rx.shape != ry.shape:
        raise ValueError("need equal-length, nonempty risk lists for both axes")
    mx, my = float(rx.mean()), float(ry.mean())
    per_node = tuple((i, float(a), float(b)) for i, (a, b) in enumerate(zip(rx, ry)))
    return RiskReport(strategy, rx.size, per_node, (mx, my, mx + my),
                      (_sample_std(rx), _sample_std(ry)))


def assess(part: Partition, ps: PatchSet, decrypted=None) -> RiskReport:
    """Risk report for one partition over both axes."""
    return average_min_risk(part.strategy,
                            min_privacy_risk(part, ps, decrypted, "x"),
                            min_privacy_risk(part, ps, decrypted, "y"))


RISK_HEADER = "strategy,N,rho_x_mean,rho_x_std,rho_y_mean,rho_y_std,rho_sum"


def write_risk_reports(reports: Sequence[RiskReport], path) -> None:
    Path(path).write_text("\n".join([RISK_HEADER] + [r.row() for r in reports]) + "\n")


def read_risk_sums(path) -> dict[str, tuple[int, float]]:
    """Map strategy label to ``(N, rho_sum)`` from a risk report file."""
    out = {}
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != RISK_HEADER:
        raise ValueError(f"{path}: not a risk report")
    for line in lines[1:]:
        if line.strip():
            f = line.split(",")
            out[f[0]] = (int(f[1]), float(f[6]))
    return out
