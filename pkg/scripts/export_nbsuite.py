#!/usr/bin/env python3
"""Export benchmark-suite JSON dumps to the engine's manifest + CSV format.

Not part of the engine: a best-effort converter for the public
zero-cost-proxy suite release, whose per-benchmark dumps (JSON, or pickles
of the same structure) look like

    {"<task>": {"<arch_key>": {"val_accuracy": 91.2,
                               "<metric>": {"score": 1.23, "time": ...},
                               ...}}}

Example (three image-classification problems sharing 16 features):

    python scripts/export_nbsuite.py --out data/nbsuite \\
        --problem nb101-cf10 zc_nasbench101.json cifar10 \\
        --problem nb201-cf10 zc_nasbench201.json cifar10 \\
        --problem nb301-cf10 zc_nasbench301.json cifar10 \\
        --features flops,params,jacov,nwot,synflow,snip,epe_nas,fisher,grad_norm,grasp,l2_norm,zen,plain,zico,meco,swap \\
        --extra-scores nb101-cf10:zico=zico_nb101_cf10.json ...

Metrics absent from the dump (for example newer ones you computed with
their published code) are merged from --extra-scores files: JSON objects
mapping arch_key -> score.  Rows missing any requested feature or the
target are a hard error unless --drop-incomplete is given, because the
engine's loader has no missing-value semantics.  Targets must be
higher-is-better; pass --negate-target for loss-valued tasks.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np  # noqa: E402

from zc_evolve.dataset import BenchmarkDataset, Problem, write_manifest  # noqa: E402


def _metric_value(record: dict, metric: str):
    value = record.get(metric)
    if isinstance(value, dict):
        value = value.get("score")
    return value


def _load_dump(path: str | Path) -> dict:
    path = Path(path)
    if path.suffix in (".pkl", ".pickle"):
        import pickle

        with open(path, "rb") as fh:
            return pickle.load(fh)
    return json.loads(path.read_text(encoding="utf-8"))


def _load_problem(problem_id: str, dump_path: str, task: str, features: list[str],
                  extra: dict[str, dict[str, float]], target_key: str,
                  negate: bool, drop_incomplete: bool) -> Problem:
    payload = _load_dump(dump_path)
    if task not in payload:
        raise SystemExit(f"{dump_path}: task '{task}' not present (has {sorted(payload)})")
    arch_ids, rows, targets = [], [], []
    dropped = defaultdict(int)
    for arch_key, record in payload[task].items():
        values = []
        ok = True
        for feature in features:
            value = extra.get(feature, {}).get(arch_key, _metric_value(record, feature))
            if value is None or not math.isfinite(float(value)):
                dropped[feature] += 1
                ok = False
                break
            values.append(float(value))
        target = record.get(target_key)
        if target is None or not math.isfinite(float(target)):
            dropped[target_key] += 1
            ok = False
        if not ok:
            continue
        arch_ids.append(str(arch_key))
        rows.append(values)
        targets.append(-float(target) if negate else float(target))
    total = len(payload[task])
    if dropped:
        message = ", ".join(f"{k}: {v}" for k, v in sorted(dropped.items()))
        if not drop_incomplete:
            raise SystemExit(
                f"problem '{problem_id}': incomplete rows ({message}); rerun with "
                "--drop-incomplete to skip them, or merge the missing metrics "
                "via --extra-scores"
            )
        print(f"problem '{problem_id}': dropped {total - len(arch_ids)}/{total} "
              f"incomplete rows ({message})")
    return Problem(
        id=problem_id,
        arch_ids=tuple(arch_ids),
        X=np.array(rows, dtype=np.float64),
        y=np.array(targets, dtype=np.float64),
        target_name="val_accuracy",
    )


def main() -> None:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--problem", nargs=3, action="append", required=True,
                        metavar=("ID", "DUMP_JSON", "TASK"),
                        help="problem id, suite dump path, task key (repeatable)")
    parser.add_argument("--features", required=True,
                        help="comma list of feature names, in output column order")
    parser.add_argument("--extra-scores", nargs="*", default=[],
                        metavar="PROBLEM:METRIC=JSON",
                        help="merge scores for a metric missing from a dump")
    parser.add_argument("--target-key", default="val_accuracy")
    parser.add_argument("--negate-target", action="store_true",
                        help="negate targets (use for loss-valued tasks)")
    parser.add_argument("--drop-incomplete", action="store_true")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args()

    features = [f.strip() for f in args.features.split(",") if f.strip()]
    extra_by_problem: dict[str, dict[str, dict[str, float]]] = defaultdict(dict)
    for spec in args.extra_scores:
        try:
            head, path = spec.split("=", 1)
            problem_id, metric = head.split(":", 1)
        except ValueError:
            raise SystemExit(f"bad --extra-scores entry '{spec}' "
                             "(expected PROBLEM:METRIC=JSON)") from None
        extra_by_problem[problem_id][metric] = json.loads(Path(path).read_text())

    problems = tuple(
        _load_problem(pid, dump, task, features, extra_by_problem.get(pid, {}),
                      args.target_key, args.negate_target, args.drop_incomplete)
        for pid, dump, task in args.problem
    )
    manifest = write_manifest(BenchmarkDataset(tuple(features), problems), args.out)
    print(f"wrote {manifest}")


if __name__ == "__main__":
    main()
