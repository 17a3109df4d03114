"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel runs once untimed per backend (JIT compile, caches), then the
best of ``--repeat`` runs is reported.
"""

import argparse
import timeit

import numpy as np

from pricesim import _kernels
from pricesim.grid import build_graph, generate_grid
from pricesim.hybridcloud import demo_catalog, demo_workload
from pricesim.planner import _matrices


def cases():
    g = build_graph(generate_grid(100, 100, 224))
    indptr, indices = g.csr
    order = np.argsort(-g.degrees, kind="stable").astype(np.int64)
    _, cost = _matrices([1250] * 8, demo_catalog(), demo_workload())
    pts = np.random.default_rng(0).random((2000, 3))
    return {
        "greedy_color_order 100x100": lambda k: k.greedy_color_order(indptr, indices, order),
        "dsatur 100x100": lambda k: k.dsatur(indptr, indices),
        "smallest_last_order 100x100": lambda k: k.smallest_last_order(indptr, indices),
        "min_cost_assignment 8x27": lambda k: k.min_cost_assignment(cost),
        "nondominated_mask n=2000": lambda k: k.nondominated_mask(pts, 1e-9),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = sorted(_kernels.BACKENDS)
    print(f"{'kernel':32s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for label, fn in cases().items():
        best = {}
        for name in names:
            impl = _kernels.BACKENDS[name]
            fn(impl)
            best[name] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
        row = "".join(f"{best[n] * 1e3:10.2f}ms" for n in names)
        speedup = best["numpy"] / best["numba"] if "numba" in best else float("nan")
        print(f"{label:32s}{row}  {speedup:8.1f}x")


if __name__ == "__main__":
    main()
