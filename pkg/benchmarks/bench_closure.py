"""Benchmark the closure kernel: compiled extension against the pure
Python fallback on identical random workloads.

Usage: python3 benchmarks/bench_closure.py [--repeat N] [--seed S]
"""

from __future__ import annotations

import argparse
import random
import time

from coeffect_lab._closure_py import closure_indexed as closure_pure

try:
    from coeffect_lab._closure_cy import closure_indexed as closure_compiled
except ImportError:
    closure_compiled = None


WORKLOADS = (
    ("small", 6, 8, 0.5),
    ("medium", 50, 64, 0.15),
    ("large", 300, 256, 0.05),
    ("dense", 120, 96, 0.4),
)


def make_instances(rng: random.Random, n_vars: int, n_links: int,
                   density: float, count: int) -> list:
    out = []
    for _ in range(count):
        sets = [
            sorted(i for i in range(n_links) if rng.random() < density)
            for _ in range(n_vars)
        ]
        out.append(sets)
    return out


def bench(fn, instances: list, n_links: int, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for sets in instances:
            fn(sets, n_links)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5,
                    help="timing repetitions, best is kept")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=60,
                    help="instances per workload")
    args = ap.parse_args()

    if closure_compiled is None:
        print("compiled kernel not importable; nothing to compare")
        return 1

    rng = random.Random(args.seed)
    header = f"{'workload':<10} {'pure (ms)':>12} {'compiled (ms)':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, n_vars, n_links, density in WORKLOADS:
        instances = make_instances(rng, n_vars, n_links, density, args.count)
        for sets in instances:
            a = closure_pure([list(s) for s in sets], n_links)
            b = closure_compiled([list(s) for s in sets], n_links)
            if a != b:
                print(f"MISMATCH on {name}: {sets!r}")
                return 1
        t_pure = bench(closure_pure, instances, n_links, args.repeat)
        t_comp = bench(closure_compiled, instances, n_links, args.repeat)
        print(f"{name:<10} {t_pure * 1e3:>12.3f} {t_comp * 1e3:>14.3f} "
              f"{t_pure / t_comp:>8.1f}x")
    print("\noutputs agree on every instance")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
