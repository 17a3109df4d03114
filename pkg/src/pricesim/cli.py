"""``price`` command line: the full pipeline and its individual stages.

Output directory layout::

    manifest.txt                     run only; key=value config echo
    patches.csv                      x,y per patch, id = line order
    risk.csv                         one row per strategy
    candidates.csv                   all feasible solutions with Pareto flags
    strategies/<name>/partition.csv  patch_id,class_id
    strategies/<name>/utility.csv    per-class output utility
    strategies/<name>/labels/class_NN.{csv,basis,keys}

``<name>`` is the strategy label with ``:`` replaced by ``_``.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .grid import build_graph, generate_grid, load_mask, load_patches, write_patches
from .hybridcloud import demo_catalog, demo_workload, load_catalog, load_workload
from .planner import (
    InfeasibleError,
    biobjective_solve,
    candidates_for,
    encrypt_partition,
    pareto_filter_3d,
    read_candidates,
    run_splits,
    write_candidates,
)
from .privrisk import assess, read_risk_sums, write_risk_reports
from .splitting import ALL_KINDS, read_partition, write_partition
from .labelcrypt import write_basis, write_keys, write_label_set

log = logging.getLogger("pricesim")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2
DEFAULT_STRATEGIES = ",".join(ALL_KINDS)


class StageError(Exception):
    def __init__(self, stage: str, message: str, code: int = EXIT_INVALID):
        super().__init__(f"{stage}: {message}")
        self.code = code


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors; exit status 2 is kept for infeasible runs
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _dirname(label: str) -> str:
    return label.replace(":", "_")


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise StageError(stage, f"missing input {path}")
    return path


def _patch_size_of(path: Path) -> int:
    first = path.read_text().split("\n", 1)[0]
    if not first.startswith("# patch_size="):
        raise StageError("load", f"{path} lacks a '# patch_size=' header")
    return int(first.split("=", 1)[1])


def _load_stage_patches(out: Path, stage: str):
    path = _require(out / "patches.csv", stage)
    return load_patches(path, _patch_size_of(path))


def _partition_files(out: Path, stage: str) -> list[Path]:
    root = _require(out / "strategies", stage)
    files = sorted(root.glob("*/partition.csv"))
    if not files:
        raise StageError(stage, f"no partition files under {root}")
    return files


def _strategy_order(out: Path) -> list[str]:
    """Strategy labels in the order the split stage wrote them."""
    order_file = out / "strategies" / "ORDER"
    if order_file.exists():
        return [s for s in order_file.read_text().split() if s]
    return []


def _load_partitions(out: Path, ps, stage: str):
    parts = [read_partition(f, len(ps)) for f in _partition_files(out, stage)]
    order = _strategy_order(out)
    rank = {label: i for i, label in enumerate(order)}
    return sorted(parts, key=lambda p: (rank.get(p.strategy.label, len(rank)), p.strategy.label))


# stages


def stage_split(ps, strategies: list[str], seed: int, out: Path) -> list:
    out.mkdir(parents=True, exist_ok=True)
    write_patches(ps, out / "patches.csv")
    parts = run_splits(strategies, ps, build_graph(ps), seed)
    root = out / "strategies"
    root.mkdir(exist_ok=True)
    for part in parts:
        d = root / _dirname(part.strategy.label)
        d.mkdir(exist_ok=True)
        write_partition(part, d / "partition.csv")
    (root / "ORDER").write_text("".join(p.strategy.label + "\n" for p in parts))
    return parts


def stage_encrypt(out: Path, k: int, seed: int) -> None:
    ps = _load_stage_patches(out, "encrypt")
    for part in _load_partitions(out, ps, "encrypt"):
        d = out / "strategies" / _dirname(part.strategy.label)
        labels = d / "labels"
        labels.mkdir(exist_ok=True)
        encrypted, _, utility = encrypt_partition(part, ps, k, seed)
        rows = ["class_id,n,u_x,u_y"]
        for c, ((enc, basis, stats), (ux, uy)) in enumerate(zip(encrypted, utility)):
            stem = labels / f"class_{c:02d}"
            write_label_set(enc, stem.with_suffix(".csv"))
            write_basis(basis, stats, ps.patch_size, stem.with_suffix(".basis"))
            write_keys(enc, stem.with_suffix(".keys"))
            rows.append(f"{c},{len(enc)},{ux!r},{uy!r}")
        (d / "utility.csv").write_text("\n".join(rows) + "\n")


def stage_risk(out: Path) -> None:
    ps = _load_stage_patches(out, "risk")
    reports = [assess(part, ps) for part in _load_partitions(out, ps, "risk")]
    write_risk_reports(reports, out / "risk.csv")


def stage_plan(out: Path, catalog, workload, budget: float) -> int:
    ps = _load_stage_patches(out, "plan")
    risk = read_risk_sums(_require(out / "risk.csv", "plan"))
    pool = []
    for part in _load_partitions(out, ps, "plan"):
        label = part.strategy.label
        if label not in risk:
            raise StageError("plan", f"risk.csv has no row for {label}")
        try:
            frontier = biobjective_solve(part.sizes.tolist(), catalog, workload, budget)
        except InfeasibleError as exc:
            raise StageError("plan", f"{label}: {exc}", EXIT_INFEASIBLE) from None
        if not frontier:
            log.warning("plan: %s has no assignment within budget %s", label, budget)
        pool.extend(candidates_for(label, part.N, risk[label][1], frontier))
    if not pool:
        log.warning("plan: no feasible solution under budget %s", budget)
    write_candidates(pool, pareto_filter_3d(pool), out / "candidates.csv")
    return len(pool)


def stage_report(inputs: list[Path], output: Path) -> int:
    pool = []
    for path in inputs:
        pool.extend(c for c, _ in read_candidates(_require(path, "report")))
    front = pareto_filter_3d(pool)
    output.parent.mkdir(parents=True, exist_ok=True)
    write_candidates(pool, front, output)
    return len(front)


# argument handling


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--grid", metavar="RxC", help="full grid, e.g. 50x50")
    src.add_argument("--patches", type=Path, metavar="FILE", help="x,y patch list")
    p.add_argument("--patch-size", type=int, default=224)
    p.add_argument("--mask-file", type=Path, help="0/1 rows selecting grid cells (with --grid)")


def _add_strategies(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strategies", default=None,
                   help="comma list; avg_* take ':N' or inherit the graph strategies' Ns "
                        f"(default: {DEFAULT_STRATEGIES})")
    p.add_argument("--strategy", action="append", default=None, help="single strategy (repeatable)")
    p.add_argument("--n", type=int, default=None, help="N for avg_* given via --strategy")


def _add_cloud(p: argparse.ArgumentParser) -> None:
    p.add_argument("--catalog", type=Path, help="instance catalog (default: bundled demo fleet)")
    p.add_argument("--workload", type=Path, help="workload file (default: bundled demo)")
    p.add_argument("--budget", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="price", description="Privacy-aware splitting and hybrid-cloud scheduling of patch grids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full pipeline")
    _add_source(run)
    _add_strategies(run)
    _add_cloud(run)
    run.add_argument("--k", type=int, default=2, choices=(1, 2))
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--record-time", action="store_true",
                     help="write wall-clock time to the manifest (breaks byte-identical reruns)")

    sp = sub.add_parser("split", help="patch, build graph, and split")
    _add_source(sp)
    _add_strategies(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=Path, required=True)

    enc = sub.add_parser("encrypt", help="perturb labels of every split in DIR")
    enc.add_argument("--out", type=Path, required=True)
    enc.add_argument("--k", type=int, default=2, choices=(1, 2))
    enc.add_argument("--seed", type=int, default=0)

    rk = sub.add_parser("risk", help="score minimal privacy risk of every split in DIR")
    rk.add_argument("--out", type=Path, required=True)

    pl = sub.add_parser("plan", help="schedule every split in DIR under a budget")
    pl.add_argument("--out", type=Path, required=True)
    _add_cloud(pl)

    rp = sub.add_parser("report", help="merge candidates files and recompute the 3D front")
    rp.add_argument("inputs", type=Path, nargs="+")
    rp.add_argument("--output", type=Path, required=True)
    return parser


def _patch_set(args):
    if args.patches is not None:
        if args.mask_file is not None:
            raise StageError("split", "--mask-file only applies to --grid")
        return load_patches(args.patches, args.patch_size)
    try:
        rows, cols = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        raise StageError("split", f"--grid must look like RxC, got {args.grid!r}") from None
    mask = load_mask(args.mask_file) if args.mask_file is not None else None
    return generate_grid(rows, cols, args.patch_size, mask)


def _strategy_list(args) -> list[str]:
    if args.strategy:
        if args.n is not None:
            return [s if ":" in s or not s.startswith("avg_") else f"{s}:{args.n}"
                    for s in args.strategy]
        return list(args.strategy)
    text = args.strategies or DEFAULT_STRATEGIES
    names = [s.strip() for s in text.split(",") if s.strip()]
    if not names:
        raise StageError("split", "strategy list is empty")
    return names


def _cloud(args):
    catalog = load_catalog(args.catalog) if args.catalog else demo_catalog()
    workload = load_workload(args.workload) if args.workload else demo_workload()
    if args.budget < 0:
        raise StageError("plan", "budget must be nonnegative")
    return catalog, workload


def _digest(path: Path | None) -> str:
    if path is None:
        return "bundled"
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _timestamp(record: bool) -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(int(epoch)))
    if record:
        return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return "unset"


def price_run(args) -> None:
    """Whole pipeline into a scratch directory, moved into place only on success."""
    out: Path = args.out
    if out.exists() and any(out.iterdir()) and not (out / "manifest.txt").exists():
        raise StageError("run", f"{out} is not empty and is not a previous run directory")
    ps = _patch_set(args)
    strategies = _strategy_list(args)
    catalog, workload = _cloud(args)
    out.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        parts = stage_split(ps, strategies, args.seed, scratch)
        stage_encrypt(scratch, args.k, args.seed)
        stage_risk(scratch)
        n_feasible = stage_plan(scratch, catalog, workload, args.budget)
        manifest = {
            "version": __version__,
            "source": f"grid {args.grid}" if args.grid else f"patches {args.patches}",
            "mask_file": args.mask_file or "none",
            "patch_size": args.patch_size,
            "n_patches": len(ps),
            "strategies": ",".join(strategies),
            "resolved_strategies": ",".join(p.strategy.label for p in parts),
            "catalog": args.catalog or "bundled",
            "catalog_sha256": _digest(args.catalog),
            "workload": args.workload or "bundled",
            "workload_sha256": _digest(args.workload),
            "budget": repr(args.budget),
            "k": args.k,
            "seed": args.seed,
            "feasible_solutions": n_feasible,
            "timestamp": _timestamp(args.record_time),
        }
        (scratch / "manifest.txt").write_text("".join(f"{k}={v}\n" for k, v in manifest.items()))
        if out.exists():
            shutil.rmtree(out)
        scratch.rename(out)
    except BaseException:
        shutil.rmtree(scratch, ignore_errors=True)
        raise


def _dispatch(args) -> None:
    if args.command == "run":
        price_run(args)
    elif args.command == "split":
        stage_split(_patch_set(args), _strategy_list(args), args.seed, args.out)
    elif args.command == "encrypt":
        stage_encrypt(args.out, args.k, args.seed)
    elif args.command == "risk":
        stage_risk(args.out)
    elif args.command == "plan":
        catalog, workload = _cloud(args)
        stage_plan(args.out, catalog, workload, args.budget)
    elif args.command == "report":
        stage_report(args.inputs, args.output)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except InfeasibleError as exc:
        print(f"error: {args.command}: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
