"""Eigen-basis perturbation of patch coordinate labels and its inverse."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .privrisk import mutual_information_samples


class LabelCryptError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NormStats:
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True, eq=False)
class EigenBasis:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    k: int

    @property
    def retained(self) -> np.ndarray:
        return self.eigenvectors[:, :self.k]


@dataclass(frozen=True, eq=False)
class EncryptedLabelSet:
    """Perturbed labels for one sub-dataset.

    ``tokens`` and ``components`` are the public part written to disk.
    ``patch_ids`` is the private record-to-patch mapping kept by the data
    owner for measuring utility; it never leaves the owner.
    """

    tokens: tuple[str, ...]
    components: np.ndarray
    k: int
    patch_size: int
    basis_id: str
    patch_ids: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.tokens)


def normalize(a) -> tuple[np.ndarray, NormStats]:
    """Center and scale each column by its sample standard deviation.

    A constant column keeps std 1 and becomes all zeros.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != 2:
        raise LabelCryptError("coordinate matrix must have two columns")
    if a.shape[0] < 2:
        raise LabelCryptError("degenerate sub-dataset")
    mean = a.mean(axis=0)
    std = a.std(axis=0, ddof=1)
    std = np.where(std > 0, std, 1.0)
    return (a - mean) / std, NormStats(mean, std)


def eigen_basis(centered, k: int = 2) -> EigenBasis:
    """Eigen-decomposition of the 2x2 feature covariance, largest eigenvalue first.

    Each eigenvector's sign is fixed so its largest-magnitude entry is
    positive, which makes the basis reproducible across LAPACK builds.
    """
    c = np.asarray(centered, dtype=float)
    if k not in (1, 2):
        raise LabelCryptError("k must be 1 or 2")
    if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] < 2:
        raise LabelCryptError("degenerate sub-dataset")
    if not np.all(np.isfinite(c)):
        raise LabelCryptError("non-finite coordinates")
    cov = c.T @ c / (c.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals, kind="stable")[::-1]
    vals, vecs = vals[order], vecs[:, order]
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.where(vecs[pivot, np.arange(2)] < 0, -1.0, 1.0)
    return EigenBasis(vals, vecs, k)


def basis_fingerprint(basis: EigenBasis, stats: NormStats) -> str:
    h = hashlib.sha256()
    for arr in (stats.mean, stats.std, basis.eigenvalues, basis.eigenvectors):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    h.update(bytes([basis.k]))
    return h.hexdigest()[:16]


def encrypt_labels(patch_ids, coords, basis: EigenBasis, stats: NormStats,
                   patch_size: int, seed: int = 0) -> EncryptedLabelSet:
    """Project normalized coordinates on the retained eigenvectors and relabel.

    Records are emitted in a seeded random order, each under a fresh 64-bit
    hex token. With ``k = 1`` a second column of uniform noise over the
    observed component range pads every record to two components.
    """
    ids = np.asarray(patch_ids, dtype=np.int64)
    a = np.asarray(coords, dtype=float)
    centered = (a - stats.mean) / stats.std
    comps = centered @ basis.retained
    rng = np.random.default_rng(seed)
    if basis.k < 2:
        lo, hi = comps[:, 0].min(), comps[:, 0].max()
        pad = rng.uniform(lo, hi, size=(comps.shape[0], 2 - basis.k))
        comps = np.hstack([comps, pad])
    tokens = []
    taken = set()
    while len(tokens) < ids.shape[0]:
        t = f"{int(rng.integers(0, 2**63, dtype=np.int64)):016x}"
        if t not in taken:
            taken.add(t)
            tokens.append(t)
    order = rng.permutation(ids.shape[0])
    return EncryptedLabelSet(tuple(tokens), comps[order], basis.k, patch_size,
                             basis_fingerprint(basis, stats), ids[order])


def decrypt_labels(enc: EncryptedLabelSet, basis: EigenBasis, stats: NormStats) -> np.ndarray:
    """Invert the projection, de-normalize, and snap to the patch grid (record order)."""
    if enc.basis_id != basis_fingerprint(basis, stats):
        raise LabelCryptError("basis does not match this label set")
    est = enc.components[:, :basis.k] @ basis.retained.T
    est = est * stats.std + stats.mean
    p = enc.patch_size
    return (np.rint(est / p) * p).astype(np.int64)


def encrypt_subset(patch_ids, coords, patch_size: int, k: int = 2, seed: int = 0):
    """Normalize, fit the basis, and encrypt one sub-dataset in one call.

    A single-patch sub-dataset has no covariance; its mean carries the
    coordinate, the basis is the identity, and the public record is all zeros.
    """
    coords = np.asarray(coords, dtype=float).reshape(-1, 2)
    if coords.shape[0] == 1:
        stats = NormStats(coords[0].copy(), np.ones(2))
        basis = EigenBasis(np.zeros(2), np.eye(2), k)
    else:
        centered, stats = normalize(coords)
        basis = eigen_basis(centered, k)
    return encrypt_labels(patch_ids, coords, basis, stats, patch_size, seed), basis, stats


def output_utility(original, estimated) -> tuple[float, float]:
    """Plug-in ``I(Y; Y_hat)`` per axis for row-aligned coordinate matrices."""
    y = np.asarray(original)
    yh = np.asarray(estimated)
    if y.shape != yh.shape:
        raise ValueError("original and estimated must be row-aligned")
    return tuple(mutual_information_samples(y[:, j], yh[:, j]) for j in range(y.shape[1]))


# on-disk formats


def write_label_set(enc: EncryptedLabelSet, path) -> None:
    lines = [f"{t},{e1:.12g},{e2:.12g}" for t, (e1, e2) in zip(enc.tokens, enc.components)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_keys(enc: EncryptedLabelSet, path) -> None:
    """Private token to patch-id table."""
    Path(path).write_text("".join(f"{t},{i}\n" for t, i in zip(enc.tokens, enc.patch_ids)))


def _fmt(arr) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(arr))


def write_basis(basis: EigenBasis, stats: NormStats, patch_size: int, path) -> None:
    Path(path).write_text(
        f"k={basis.k}\n"
        f"patch_size={patch_size}\n"
        f"mean={_fmt(stats.mean)}\n"
        f"std={_fmt(stats.std)}\n"
        f"eigenvalues={_fmt(basis.eigenvalues)}\n"
        f"eigenvectors={_fmt(basis.eigenvectors)}\n"
        f"basis_id={basis_fingerprint(basis, stats)}\n")


def read_basis(path) -> tuple[EigenBasis, NormStats, int]:
    kv = dict(line.split("=", 1) for line in Path(path).read_text().splitlines() if "=" in line)
    vec = lambda key: np.array([float(v) for v in kv[key].split()])  # noqa: E731
    basis = EigenBasis(vec("eigenvalues"), vec("eigenvectors").reshape(2, 2), int(kv["k"]))
    return basis, NormStats(vec("mean"), vec("std")), int(kv["patch_size"])


def read_label_set(path, basis: EigenBasis, stats: NormStats, patch_size: int,
                   keys_path=None) -> EncryptedLabelSet:
    tokens, comps = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        f = line.split(",")
        if len(f) != 3:
            raise LabelCryptError(f"{path}:{lineno}: expected r_hex,e1,e2")
        tokens.append(f[0])
        comps.append((float(f[1]), float(f[2])))
    ids = np.full(len(tokens), -1, dtype=np.int64)
    if keys_path is not None:
        table = dict(line.split(",") for line in Path(keys_path).read_text().split())
        ids = np.array([int(table[t]) for t in tokens], dtype=np.int64)
    return EncryptedLabelSet(tuple(tokens), np.array(comps).reshape(-1, 2), basis.k,
                             patch_size, basis_fingerprint(basis, stats), ids)
