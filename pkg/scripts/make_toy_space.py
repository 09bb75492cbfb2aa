#!/usr/bin/env python3
"""Generate the bundled toy search space (fixtures/toy_space/).

Six categorical positions of arity 4 give 4096 encodings.  Each of the 16
standard metric features is exp(smooth function of the normalized encoding
plus mild noise), so every built-in proxy is a smooth-ish landscape over
single-position mutations; the target column is an arbitrary pseudo-score
that the searcher never reads.

The fixture in the repository was produced with the defaults:

    python scripts/make_toy_space.py --out fixtures/toy_space
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from zc_evolve.zoo import BASELINE_FEATURES  # noqa: E402

ARITY = (4, 4, 4, 4, 4, 4)
NOISE_SCALE = 0.05
# rough log-scale offsets so feature magnitudes resemble their real-world spread
LOG_OFFSET = {"flops": 16.0, "params": 13.0, "synflow": 30.0}


def build(seed: int) -> tuple[list[str], np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    k = len(ARITY)
    encodings = list(itertools.product(*(range(a) for a in ARITY)))
    U = np.array(encodings, dtype=np.float64) / (np.array(ARITY, dtype=np.float64) - 1.0)

    columns = []
    for name in BASELINE_FEATURES:
        linear = rng.uniform(-1.5, 1.5, size=k)
        amp = rng.uniform(-0.6, 0.6, size=k)
        phase = rng.uniform(0.0, np.pi, size=k)
        offset = LOG_OFFSET.get(name, rng.uniform(-1.0, 3.0))
        log_val = (
            offset
            + U @ linear
            + (amp * np.sin(np.pi * U + phase)).sum(axis=1)
            + rng.normal(0.0, NOISE_SCALE, size=len(U))
        )
        columns.append(np.exp(log_val))
    X = np.column_stack(columns)

    target_w = rng.uniform(-2.0, 2.0, size=k)
    target = 70.0 + 5.0 * np.tanh(U @ target_w) + rng.normal(0.0, 0.2, size=len(U))
    arch_ids = ["-".join(str(v) for v in enc) for enc in encodings]
    return arch_ids, X, target


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures/toy_space", help="output directory")
    parser.add_argument("--seed", type=int, default=20240918, help="generator seed")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    arch_ids, X, target = build(args.seed)
    csv_name = "toy_space.csv"
    with open(out_dir / csv_name, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["arch_id", *BASELINE_FEATURES, "pseudo_score"])
        for arch, row, t in zip(arch_ids, X, target):
            writer.writerow([arch, *(repr(v) for v in row.tolist()), repr(float(t))])
    manifest = {"arity": list(ARITY), "csv": csv_name}
    (out_dir / "space.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {out_dir / 'space.json'} ({len(arch_ids)} encodings)")


if __name__ == "__main__":
    main()
