#!/usr/bin/env python3
"""Generate the bundled synthetic recovery dataset (fixtures/synthetic/).

Three pseudo-problems share five features x1..x5; the target of each is a
strictly monotone transform of

    x1 * (x2 + sqrt(x3))

plus noise small enough to preserve ranks exactly (below a third of the
smallest gap between transformed values).  Feature distributions and the
transform differ per problem, so only formulas monotone-equivalent to the
planted one correlate highly everywhere.  x4 and x5 are decoys.

The fixture in the repository was produced with the defaults:

    python scripts/make_synthetic_dataset.py --out fixtures/synthetic
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from zc_evolve.dataset import BenchmarkDataset, Problem, write_manifest  # noqa: E402

FEATURES = ("x1", "x2", "x3", "x4", "x5")
N_ROWS = 1000


def _planted(X: np.ndarray) -> np.ndarray:
    return X[:, 0] * (X[:, 1] + np.sqrt(X[:, 2]))


def _rank_preserving_noise(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    gaps = np.diff(np.sort(values))
    min_gap = gaps[gaps > 0].min()
    return rng.uniform(-min_gap / 3.0, min_gap / 3.0, size=values.shape)


def _problem(problem_id: str, lows, highs, transform, rng: np.random.Generator) -> Problem:
    X = rng.uniform(np.asarray(lows), np.asarray(highs), size=(N_ROWS, len(FEATURES)))
    t = transform(_planted(X))
    y = t + _rank_preserving_noise(t, rng)
    arch_ids = tuple(f"{problem_id}-{i:04d}" for i in range(N_ROWS))
    return Problem(id=problem_id, arch_ids=arch_ids, X=X, y=y, target_name="score")


def build(seed: int) -> BenchmarkDataset:
    rng = np.random.default_rng(seed)
    problems = (
        _problem("syn-a",
                 lows=(0.5, 0.5, 0.5, 0.5, 0.5), highs=(2.5, 2.5, 2.5, 2.5, 2.5),
                 transform=lambda g: g, rng=rng),
        _problem("syn-b",
                 lows=(0.2, 0.1, 0.5, 0.1, 0.1), highs=(4.0, 1.5, 9.0, 3.0, 3.0),
                 transform=np.log, rng=rng),
        _problem("syn-c",
                 lows=(1.0, 0.05, 0.01, 0.5, 0.5), highs=(3.0, 0.8, 2.5, 8.0, 8.0),
                 transform=np.sqrt, rng=rng),
    )
    return BenchmarkDataset(FEATURES, problems)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures/synthetic", help="output directory")
    parser.add_argument("--seed", type=int, default=20240917, help="generator seed")
    args = parser.parse_args()
    manifest = write_manifest(build(args.seed), args.out)
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()
