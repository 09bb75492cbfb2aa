"""Multi-problem benchmark tables: loading, validation, seeded train/test splits.

A dataset is a set of named problems sharing one feature list; each problem
is a table of architectures with one row per architecture (feature values
plus a scalar target, higher is better).  Datasets and views are immutable
after construction, so any number of evaluation workers can read them
concurrently.

On-disk format: a JSON manifest
``{"feature_names": [...], "problems": [{"id", "csv", "target_column"}]}``
next to one CSV per problem with header ``arch_id,<features...>,<target>``.
"""

from __future__ import annotations

import csv
import json
import math
import re
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .expr import OPERATOR_ARITY

FEATURE_NAME_RE = re.compile(r"[a-z0-9_]+\Z")

VIEW_LABELS = ("train", "test", "full")


class DatasetError(Exception):
    """Malformed or inconsistent benchmark data."""


class ProblemMatrix(NamedTuple):
    """One problem's rows as arrays, in view order."""

    problem_id: str
    X: np.ndarray
    y: np.ndarray
    arch_ids: tuple[str, ...]


@dataclass(frozen=True)
class Problem:
    """A single (search space, task) table.

    `group` is optional presentation metadata (e.g. "in-dataset" vs
    "unseen-task") carried through to report headers.
    """

    id: str
    arch_ids: tuple[str, ...]
    X: np.ndarray  # (n_rows, n_features)
    y: np.ndarray  # (n_rows,)
    target_name: str
    group: str | None = None

    def __post_init__(self) -> None:
        n = len(self.arch_ids)
        if n < 2:
            raise DatasetError(f"problem '{self.id}': needs at least 2 rows, got {n}")
        if len(set(self.arch_ids)) != n:
            seen: set[str] = set()
            for arch in self.arch_ids:
                if arch in seen:
                    raise DatasetError(f"problem '{self.id}': duplicate arch_id '{arch}'")
                seen.add(arch)
        if self.X.shape[0] != n or self.X.ndim != 2:
            raise DatasetError(f"problem '{self.id}': feature matrix shape {self.X.shape} does not match {n} rows")
        if self.y.shape != (n,):
            raise DatasetError(f"problem '{self.id}': target vector shape {self.y.shape} does not match {n} rows")
        if not np.isfinite(self.X).all() or not np.isfinite(self.y).all():
            raise DatasetError(f"problem '{self.id}': non-finite values in table")
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.arch_ids)


@dataclass(frozen=True)
class BenchmarkDataset:
    """Named problems over one shared, ordered feature list."""

    feature_names: tuple[str, ...]
    problems: tuple[Problem, ...]

    def __post_init__(self) -> None:
        if not self.problems:
            raise DatasetError("dataset has no problems")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DatasetError("duplicate feature names")
        for name in self.feature_names:
            if not FEATURE_NAME_RE.match(name):
                raise DatasetError(
                    f"invalid feature name '{name}' (must be lowercase alphanumeric/underscore)"
                )
            if name in OPERATOR_ARITY:
                raise DatasetError(f"feature name '{name}' collides with an operator")
        ids = [p.id for p in self.problems]
        if len(set(ids)) != len(ids):
            raise DatasetError("duplicate problem ids")
        d = len(self.feature_names)
        for p in self.problems:
            if p.X.shape[1] != d:
                raise DatasetError(
                    f"problem '{p.id}': {p.X.shape[1]} feature columns, expected {d}"
                )

    @property
    def problem_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.problems)

    def problem(self, problem_id: str) -> Problem:
        for p in self.problems:
            if p.id == problem_id:
                return p
        raise DatasetError(f"unknown problem id '{problem_id}'")


@dataclass(frozen=True)
class DatasetView:
    """Per-problem row subsets of a dataset (train/test/full)."""

    dataset: BenchmarkDataset
    indices: Mapping[str, np.ndarray]
    label: str

    def __post_init__(self) -> None:
        if self.label not in VIEW_LABELS:
            raise DatasetError(f"view label must be one of {VIEW_LABELS}")
        if set(self.indices) != set(self.dataset.problem_ids):
            raise DatasetError("view indices do not cover exactly the dataset's problems")

    def matrix(self, problem_id: str) -> ProblemMatrix:
        p = self.dataset.problem(problem_id)
        idx = self.indices[problem_id]
        return ProblemMatrix(
            problem_id=problem_id,
            X=p.X[idx],
            y=p.y[idx],
            arch_ids=tuple(p.arch_ids[i] for i in idx),
        )

    def matrices(self) -> list[ProblemMatrix]:
        return [self.matrix(pid) for pid in self.dataset.problem_ids]


def full_view(dataset: BenchmarkDataset) -> DatasetView:
    """View covering every row of every problem, in on-disk order."""
    idx = {p.id: np.arange(p.n_rows) for p in dataset.problems}
    return DatasetView(dataset, idx, "full")


def split_train_test(
    dataset: BenchmarkDataset, train_fraction: float, seed: int
) -> tuple[DatasetView, DatasetView]:
    """Seeded per-problem split: floor(fraction * n) shuffled rows train, rest test.

    Each problem shuffles under its own stream (seed mixed with a stable
    hash of the problem id), so adding a problem does not perturb the
    others' splits.  Both sides must keep at least 2 rows per problem.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    train_idx: dict[str, np.ndarray] = {}
    test_idx: dict[str, np.ndarray] = {}
    for p in dataset.problems:
        n = p.n_rows
        k = math.floor(train_fraction * n)
        if k < 2 or n - k < 2:
            raise ValueError(
                f"problem '{p.id}': split {train_fraction} leaves {k} train / {n - k} test rows; "
                "both sides need at least 2"
            )
        rng = np.random.default_rng((seed, zlib.crc32(p.id.encode("utf-8"))))
        perm = rng.permutation(n)
        train_idx[p.id] = np.sort(perm[:k])
        test_idx[p.id] = np.sort(perm[k:])
    return (
        DatasetView(dataset, train_idx, "train"),
        DatasetView(dataset, test_idx, "test"),
    )


# ---------------------------------------------------------------------------
# on-disk format
# ---------------------------------------------------------------------------

def _read_problem_csv(csv_path: Path, problem_id: str, feature_names: Sequence[str],
                      target_column: str) -> Problem:
    expected_header = ["arch_id", *feature_names, target_column]
    if not csv_path.is_file():
        raise DatasetError(f"problem '{problem_id}': csv file not found: {csv_path}")
    arch_ids: list[str] = []
    rows: list[list[float]] = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"problem '{problem_id}': empty csv {csv_path}") from None
        if header != expected_header:
            raise DatasetError(
                f"problem '{problem_id}': csv header {header} does not match "
                f"manifest columns {expected_header}"
            )
        seen: set[str] = set()
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(expected_header):
                raise DatasetError(
                    f"problem '{problem_id}', line {line_no}: expected "
                    f"{len(expected_header)} cells, got {len(record)}"
                )
            arch_id = record[0]
            if arch_id in seen:
                raise DatasetError(
                    f"problem '{problem_id}', line {line_no}: duplicate arch_id '{arch_id}'"
                )
            seen.add(arch_id)
            values: list[float] = []
            for col_name, cell in zip(expected_header[1:], record[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"problem '{problem_id}', line {line_no}, column '{col_name}': "
                        f"non-numeric value '{cell}'"
                    ) from None
                if not math.isfinite(value):
                    raise DatasetError(
                        f"problem '{problem_id}', line {line_no}, column '{col_name}': "
                        f"non-finite value '{cell}'"
                    )
                values.append(value)
            arch_ids.append(arch_id)
            rows.append(values)
    table = np.array(rows, dtype=np.float64).reshape(len(rows), len(expected_header) - 1)
    return Problem(
        id=problem_id,
        arch_ids=tuple(arch_ids),
        X=table[:, :-1].copy(),
        y=table[:, -1].copy(),
        target_name=target_column,
    )


def load_manifest(path: str | Path) -> BenchmarkDataset:
    """Load and validate a dataset from its JSON manifest (row order preserved)."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"manifest {path} is not valid JSON: {e}") from None
    if not isinstance(manifest, dict):
        raise DatasetError(f"manifest {path}: expected a JSON object")
    feature_names = manifest.get("feature_names")
    entries = manifest.get("problems")
    if not isinstance(feature_names, list) or not all(isinstance(f, str) for f in feature_names):
        raise DatasetError(f"manifest {path}: 'feature_names' must be a list of strings")
    if not isinstance(entries, list) or not entries:
        raise DatasetError(f"manifest {path}: 'problems' must be a non-empty list")
    problems = []
    for entry in entries:
        try:
            problem_id = entry["id"]
            csv_rel = entry["csv"]
            target_column = entry["target_column"]
        except (TypeError, KeyError) as e:
            raise DatasetError(
                f"manifest {path}: each problem needs 'id', 'csv' and 'target_column' ({e})"
            ) from None
        group = entry.get("group")
        if group is not None and not isinstance(group, str):
            raise DatasetError(f"manifest {path}: problem '{problem_id}' group must be a string")
        problem = _read_problem_csv(path.parent / csv_rel, problem_id, feature_names,
                                    target_column)
        if group is not None:
            problem = replace(problem, group=group)
        problems.append(problem)
    return BenchmarkDataset(tuple(feature_names), tuple(problems))


def write_manifest(dataset: BenchmarkDataset, out_dir: str | Path,
                   manifest_name: str = "manifest.json") -> Path:
    """Write the dataset in canonical form; load(write(load(x))) is byte-identical."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for p in dataset.problems:
        csv_name = f"{p.id}.csv"
        entry = {"id": p.id, "csv": csv_name, "target_column": p.target_name}
        if p.group is not None:
            entry["group"] = p.group
        entries.append(entry)
        with open(out_dir / csv_name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["arch_id", *dataset.feature_names, p.target_name])
            for arch_id, row, target in zip(p.arch_ids, p.X, p.y):
                writer.writerow([arch_id, *(repr(v) for v in row.tolist()), repr(float(target))])
    manifest_path = out_dir / manifest_name
    manifest = {"feature_names": list(dataset.feature_names), "problems": entries}
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path
