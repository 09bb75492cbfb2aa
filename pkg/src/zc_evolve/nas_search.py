"""Aging Evolution over an enumerable, table-backed toy search space.

Architectures are categorical vectors (position i takes values
0..arity_i-1); a shipped table maps every encoding to a feature vector, so
any NamedProxy can serve as the training-free search objective.  Classic
queue dynamics: seed P random encodings, then each cycle samples S members,
mutates the sample's best and evicts the oldest.
"""

from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import DatasetError, FEATURE_NAME_RE
from .expr import Node, evaluate_batch
from .zoo import NamedProxy

ArchEncoding = tuple[int, ...]

EXHAUSTIVE_CAP = 10**6


def encode_arch(values: Sequence[int]) -> str:
    return "-".join(str(v) for v in values)


def decode_arch(text: str) -> ArchEncoding:
    try:
        return tuple(int(part) for part in text.split("-"))
    except ValueError:
        raise DatasetError(f"malformed encoding string '{text}'") from None


@dataclass(frozen=True)
class ToySearchSpace:
    """An exhaustively tabulated search space: every encoding has a feature row."""

    arity: tuple[int, ...]
    feature_names: tuple[str, ...]
    arch_ids: tuple[str, ...]
    X: np.ndarray

    def __post_init__(self) -> None:
        if not self.arity or any(a < 1 for a in self.arity):
            raise DatasetError("arity vector must be non-empty positive integers")
        total = math.prod(self.arity)
        if len(self.arch_ids) != total:
            raise DatasetError(
                f"space table has {len(self.arch_ids)} rows, expected {total} "
                f"(product of arities)"
            )
        if self.X.shape != (total, len(self.feature_names)):
            raise DatasetError(
                f"space feature matrix shape {self.X.shape} does not match "
                f"{total} rows x {len(self.feature_names)} features"
            )
        seen = set()
        for arch in self.arch_ids:
            enc = decode_arch(arch)
            if len(enc) != len(self.arity) or any(
                not 0 <= v < a for v, a in zip(enc, self.arity)
            ):
                raise DatasetError(f"encoding '{arch}' outside arity bounds {self.arity}")
            if arch in seen:
                raise DatasetError(f"duplicate encoding '{arch}' in space table")
            seen.add(arch)
        self.X.setflags(write=False)

    @property
    def size(self) -> int:
        return math.prod(self.arity)

    def row_index(self) -> dict[str, int]:
        return {arch: i for i, arch in enumerate(self.arch_ids)}


def load_space(manifest_path: str | Path) -> ToySearchSpace:
    """Load a space manifest ``{"arity": [...], "csv": path}``.

    The CSV has the problem-table shape: ``arch_id`` first, the target
    column last, feature columns in between.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise DatasetError(f"space manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DatasetError(f"space manifest {manifest_path} is not valid JSON: {e}") from None
    arity = manifest.get("arity")
    csv_rel = manifest.get("csv")
    if (not isinstance(arity, list) or not arity
            or not all(isinstance(a, int) and a >= 1 for a in arity)):
        raise DatasetError(f"space manifest {manifest_path}: 'arity' must be positive integers")
    if not isinstance(csv_rel, str):
        raise DatasetError(f"space manifest {manifest_path}: 'csv' must be a path string")
    csv_path = manifest_path.parent / csv_rel
    if not csv_path.is_file():
        raise DatasetError(f"space table not found: {csv_path}")
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3 or header[0] != "arch_id":
            raise DatasetError(
                f"space table {csv_path}: header must be arch_id,<features...>,<target>"
            )
        feature_names = tuple(header[1:-1])
        for name in feature_names:
            if not FEATURE_NAME_RE.match(name):
                raise DatasetError(f"space table {csv_path}: invalid feature name '{name}'")
        arch_ids: list[str] = []
        rows: list[list[float]] = []
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise DatasetError(
                    f"space table {csv_path}, line {line_no}: expected {len(header)} cells"
                )
            try:
                values = [float(cell) for cell in record[1:-1]]
            except ValueError:
                raise DatasetError(
                    f"space table {csv_path}, line {line_no}: non-numeric feature cell"
                ) from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetError(
                    f"space table {csv_path}, line {line_no}: non-finite feature cell"
                )
            arch_ids.append(record[0])
            rows.append(values)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return ToySearchSpace(tuple(arity), feature_names, tuple(arch_ids), X)


@dataclass(frozen=True)
class AgingParams:
    """Aging-Evolution budget: P in the queue, S sampled per cycle, C total evaluations."""

    population_size: int = 50
    sample_size: int = 10
    cycles: int = 2000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        if not 1 <= self.sample_size <= self.population_size:
            raise ValueError(
                f"sample_size must be in [1, population_size], got {self.sample_size}"
            )
        if self.cycles < self.population_size:
            raise ValueError(
                f"cycles ({self.cycles}) must be >= population_size "
                f"({self.population_size}); the first P cycles seed the queue"
            )
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass
class AgingResult:
    best: ArchEncoding
    best_score: float
    history: list[dict]


def _score_table(space: ToySearchSpace, tree: Node) -> np.ndarray:
    # non-finite proxy scores rank below everything rather than poisoning argmax
    scores = evaluate_batch(tree, space.X)
    return np.where(np.isfinite(scores), scores, -np.inf)


def mutate_arch(enc: ArchEncoding, space: ToySearchSpace,
                rng: np.random.Generator) -> ArchEncoding:
    """Resample one position (chosen among positions with arity > 1) to a different value."""
    eligible = [i for i, a in enumerate(space.arity) if a > 1]
    if not eligible:
        raise ValueError("cannot mutate: every position has arity 1")
    pos = eligible[int(rng.integers(len(eligible)))]
    shifted = int(rng.integers(space.arity[pos] - 1))
    new_value = shifted if shifted < enc[pos] else shifted + 1
    out = list(enc)
    out[pos] = new_value
    return tuple(out)


def _random_arch(space: ToySearchSpace, rng: np.random.Generator) -> ArchEncoding:
    return tuple(int(rng.integers(a)) for a in space.arity)


def aging_evolution(space: ToySearchSpace, proxy: NamedProxy,
                    params: AgingParams) -> AgingResult:
    """Queue-based evolution maximizing the proxy score; returns the best ever evaluated.

    The first `population_size` cycles seed the queue with random
    encodings; each later cycle samples `sample_size` members without
    replacement, mutates the sample's best and evicts the oldest member.
    Deterministic under `params.seed`.
    """
    rng = np.random.default_rng(params.seed)
    scores = _score_table(space, proxy.tree)
    by_arch = dict(zip(space.arch_ids, scores.tolist()))

    def lookup(enc: ArchEncoding) -> float:
        key = encode_arch(enc)
        try:
            return by_arch[key]
        except KeyError:
            raise DatasetError(f"encoding '{key}' missing from the space table") from None

    queue: deque[tuple[ArchEncoding, float]] = deque()
    best: ArchEncoding | None = None
    best_score = -math.inf
    history: list[dict] = []
    for cycle in range(params.cycles):
        if cycle < params.population_size:
            parent = None
            child = _random_arch(space, rng)
        else:
            picks = rng.choice(len(queue), size=params.sample_size, replace=False)
            sampled = [queue[int(i)] for i in picks]
            parent = min(sampled, key=lambda item: (-item[1], item[0]))[0]
            child = mutate_arch(parent, space, rng)
        child_score = lookup(child)
        queue.append((child, child_score))
        if len(queue) > params.population_size:
            queue.popleft()
        if child_score > best_score or (child_score == best_score
                                        and (best is None or child < best)):
            best, best_score = child, child_score
        history.append({
            "cycle": cycle,
            "parent": encode_arch(parent) if parent is not None else None,
            "child": encode_arch(child),
            "child_score": child_score,
            "best_score": best_score,
        })
    assert best is not None
    return AgingResult(best=best, best_score=best_score, history=history)


def exhaustive_argmax(space: ToySearchSpace, proxy: NamedProxy,
                      cap: int = EXHAUSTIVE_CAP) -> tuple[ArchEncoding, float]:
    """Enumerate the whole table and return the proxy-maximal encoding.

    Ties resolve to the lexicographically smallest encoding.  Refuses
    spaces larger than `cap`.
    """
    if space.size > cap:
        raise ValueError(f"space size {space.size} exceeds enumeration cap {cap}")
    scores = _score_table(space, proxy.tree)
    top = scores.max()
    candidates = [decode_arch(space.arch_ids[i]) for i in np.flatnonzero(scores == top)]
    return min(candidates), float(top)
