#!/usr/bin/env python3
"""Benchmark the compiled inversion kernel against the NumPy fallback.

The kernel dominates evolution runtime (one Kendall tau per problem per
candidate, thousands of candidates per run), so this is the number that
matters when deciding whether the extension built correctly.

    python benchmarks/bench_kendall.py [--sizes 100,700,5000,50000] [--repeats 9]
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from zc_evolve._inversions_py import count_inversions as inversions_numpy  # noqa: E402

try:
    from zc_evolve._inversions import count_inversions as inversions_compiled
except ImportError:
    inversions_compiled = None


def _time(fn, arg, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(arg)
        best = min(best, time.perf_counter() - start)
    return best


def _bench_inversions(sizes, repeats):
    rng = np.random.default_rng(0)
    print(f"{'n':>8}  {'compiled':>12}  {'numpy':>12}  {'speedup':>8}")
    for n in sizes:
        data = rng.integers(0, max(2, n // 3), size=n).astype(float)
        t_py = _time(inversions_numpy, data, repeats)
        if inversions_compiled is None:
            print(f"{n:>8}  {'unavailable':>12}  {t_py * 1e6:>10.1f}us  {'-':>8}")
            continue
        assert inversions_compiled(data) == inversions_numpy(data)
        t_c = _time(inversions_compiled, data, repeats)
        print(f"{n:>8}  {t_c * 1e6:>10.1f}us  {t_py * 1e6:>10.1f}us  {t_py / t_c:>7.1f}x")


def _bench_full_tau(repeats):
    # end-to-end kendall_tau at the problem sizes an evolution run sees
    from zc_evolve.fitness import KENDALL_BACKEND, kendall_tau

    rng = np.random.default_rng(1)
    n = 700
    x = rng.normal(size=n)
    y = rng.integers(0, 50, size=n).astype(float)
    best = _time(lambda pair: kendall_tau(*pair), (x, y), repeats)
    print(f"\nkendall_tau n={n} via '{KENDALL_BACKEND}' backend: {best * 1e6:.1f}us per call")
    print("(one 100-individual x 50-generation x 3-problem run needs ~15k calls)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="100,700,5000,50000")
    parser.add_argument("--repeats", type=int, default=9)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    if inversions_compiled is None:
        print("compiled kernel unavailable; showing the fallback only\n")
    _bench_inversions(sizes, args.repeats)
    _bench_full_tau(args.repeats)


if __name__ == "__main__":
    main()
