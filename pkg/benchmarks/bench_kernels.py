"""Time the greedy kernels and a full selection on both backends.

    python benchmarks/bench_kernels.py [--rows 24 --cols 24 --ratio 0.2 --repeat 20]
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from f3a import kernels, search
from f3a.harness import generate_task
from f3a.model import HyperParams, make_budget
from f3a.sensing import build_bank


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=24)
    ap.add_argument("--cols", type=int, default=24)
    ap.add_argument("--ratio", type=float, default=0.2)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    hp = HyperParams()
    task = generate_task("distributed", 0, args.rows, args.cols, 64, 64, hp)
    grid = task.grid
    geom = search._Geometry(grid, hp)
    rng = np.random.default_rng(0)
    n = grid.n
    k = make_budget(args.ratio, n).k
    init = np.sort(rng.choice(n, k // 4, replace=False)).astype(np.int64)
    cand = np.setdiff1d(np.arange(n), init).astype(np.int64)
    base = rng.standard_normal(cand.size)
    weight = rng.uniform(0.05, 1.05, n)
    bank = build_bank(hp, 64, 64)
    budget = make_budget(args.ratio, n)

    found = kernels.backends()
    print(f"grid {args.rows}x{args.cols} (N={n}), K={k}, backends: {', '.join(found)}")
    print(f"{'backend':8s} {'kernel':18s} {'best ms':>9s} {'median ms':>10s}")
    results = {}
    for name, mod in found.items():
        rows = {
            "greedy_penalized": lambda: mod.greedy_penalized(
                base, cand, init, geom.gram, geom.rows, geom.cols, geom.ktab, 1.0, 1.0, 0.175, k - init.size),
            "greedy_maxmin": lambda: mod.greedy_maxmin(weight, geom.gram, 0, k),
        }
        for kname, fn in rows.items():
            best, med = best_of(fn, args.repeat)
            results[(name, kname)] = best
            print(f"{name:8s} {kname:18s} {best * 1e3:9.3f} {med * 1e3:10.3f}")
        saved = kernels.greedy_penalized, kernels.greedy_maxmin
        kernels.greedy_penalized, kernels.greedy_maxmin = mod.greedy_penalized, mod.greedy_maxmin
        try:
            best, med = best_of(lambda: search.select(grid, task.cues, bank, hp, budget), args.repeat)
        finally:
            kernels.greedy_penalized, kernels.greedy_maxmin = saved
        results[(name, "select")] = best
        print(f"{name:8s} {'select (end to end)':18s} {best * 1e3:9.3f} {med * 1e3:10.3f}")
    if "cython" in found:
        for kname in ("greedy_penalized", "greedy_maxmin", "select"):
            print(f"speedup {kname}: {results[('python', kname)] / results[('cython', kname)]:.1f}x")


if __name__ == "__main__":
    main()
