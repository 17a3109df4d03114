"""Hybrid-cloud catalog, inference workload, and time/cost estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

PROVIDERS = ("private", "commercial")


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSpec:
    id: str
    provider: str
    region: str
    perf_factor: float
    price: float
    bandwidth: float

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise CatalogError(f"instance {self.id}: provider must be private or commercial")
        if not (math.isfinite(self.perf_factor) and self.perf_factor > 0):
            raise CatalogError(f"instance {self.id}: perf_factor must be positive and finite")
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise CatalogError(f"instance {self.id}: bandwidth must be positive and finite")
        if not (math.isfinite(self.price) and self.price >= 0):
            raise CatalogError(f"instance {self.id}: price must be nonnegative")
        if self.provider == "private" and self.price != 0:
            raise CatalogError(f"instance {self.id}: private instances must have price 0")


@dataclass(frozen=True)
class Workload:
    """Inference job shipped with every sub-dataset.

    Only the first three fields feed the estimator; ``meta`` carries
    descriptive figures (parameters, FLOPs, batch size, memory).
    """

    model_bytes: float
    per_patch_ref_seconds: float
    patch_bytes: float
    meta: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.per_patch_ref_seconds <= 0:
            raise CatalogError("per_patch_ref_seconds must be positive")
        if self.model_bytes < 0 or self.patch_bytes < 0:
            raise CatalogError("byte sizes must be nonnegative")


@dataclass(frozen=True)
class TimeEstimate:
    t_comm: float
    t_compt: float

    @property
    def total(self) -> float:
        return self.t_comm + self.t_compt


def parse_catalog(text: str, source: str = "<catalog>") -> list[InstanceSpec]:
    specs = []
    ids = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        f = [s.strip() for s in line.split(",")]
        if len(f) != 6:
            raise CatalogError(f"{source}:{lineno}: expected 6 fields, got {len(f)}")
        try:
            spec = InstanceSpec(f[0], f[1], f[2], float(f[3]), float(f[4]), float(f[5]))
        except ValueError as exc:
            raise CatalogError(f"{source}:{lineno}: {exc}") from None
        if spec.id in ids:
            raise CatalogError(f"{source}:{lineno}: duplicate instance id {spec.id!r}")
        ids.add(spec.id)
        specs.append(spec)
    return specs


def load_catalog(path) -> list[InstanceSpec]:
    """``id,provider,region,perf_factor,price_per_hour,bandwidth_mbps`` per line."""
    return parse_catalog(Path(path).read_text(), str(path))


_WORKLOAD_FIELDS = ("model_bytes", "per_patch_ref_seconds", "patch_bytes")


def parse_workload(text: str, source: str = "<workload>") -> Workload:
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CatalogError(f"{source}:{lineno}: expected key=value")
        kv[key.strip()] = value.strip()
    missing = [k for k in _WORKLOAD_FIELDS if k not in kv]
    if missing:
        raise CatalogError(f"{source}: missing workload fields {missing}")
    try:
        nums = {k: float(kv.pop(k)) for k in _WORKLOAD_FIELDS}
    except ValueError as exc:
        raise CatalogError(f"{source}: {exc}") from None
    return Workload(meta=kv, **nums)


def load_workload(path) -> Workload:
    return parse_workload(Path(path).read_text(), str(path))


def demo_catalog() -> list[InstanceSpec]:
    """Bundled fleet: 25 commercial GPU servers and 2 private ones."""
    text = resources.files("pricesim.data").joinpath("demo_catalog.csv").read_text()
    return parse_catalog(text, "demo_catalog.csv")


def demo_workload() -> Workload:
    text = resources.files("pricesim.data").joinpath("demo_workload.txt").read_text()
    return parse_workload(text, "demo_workload.txt")


def estimate_times(n_patches: int, inst: InstanceSpec, w: Workload) -> TimeEstimate:
    """Upload of model plus sub-dataset, and linear-throughput compute time, in seconds."""
    if n_patches < 1:
        raise ValueError("n_patches must be >= 1")
    t_comm = 8.0 * (w.model_bytes + n_patches * w.patch_bytes) / (inst.bandwidth * 1e6)
    t_compt = n_patches * w.per_patch_ref_seconds / inst.perf_factor
    return TimeEstimate(t_comm, t_compt)


def _prices(catalog) -> Mapping[str, float]:
    if isinstance(catalog, Mapping):
        return catalog
    return {inst.id: inst.price for inst in catalog}


def cost_of(assignment: Mapping[int, str], times: Mapping[tuple[int, str], TimeEstimate],
            catalog: Sequence[InstanceSpec] | Mapping[str, float]) -> float:
    """Pay-as-you-go cost: hours on each used instance times its hourly price."""
    prices = _prices(catalog)
    return math.fsum(times[d, k].total / 3600.0 * prices[k] for d, k in assignment.items())


def makespan_of(assignment: Mapping[int, str],
                times: Mapping[tuple[int, str], TimeEstimate]) -> float:
    """Finish time of the slowest used instance; 0 for an empty assignment."""
    return max((times[d, k].total for d, k in assignment.items()), default=0.0)
