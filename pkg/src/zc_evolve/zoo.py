"""Built-in proxies and the evaluation/reporting harness.

The registry holds the 16 hand-crafted metric pass-throughs (bare feature
leaves, exempt from the synthesized-tree minimum depth because they are
baselines, not genotypes) plus the two bundled evolved formulas shipped
under the names ``sr-nas-eq2`` and ``sr-nas-eq3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import expr
from .dataset import ProblemMatrix
from .expr import Leaf, Node, Op, parse
from .fitness import WORST_TAU, kendall_tau

BASELINE_FEATURES = (
    "flops", "params", "jacov", "nwot", "synflow", "snip", "epe_nas", "fisher",
    "grad_norm", "grasp", "l2_norm", "zen", "plain", "zico", "meco", "swap",
)

# zico * meco^2 * log(flops) / ((meco + zen) * (sqrt(snip) * (meco + zen + 2*l2_norm) + meco)),
# written without constants (squares and doublings become mul/add of the same leaf)
SR_NAS_EQ2 = (
    "(div (mul (mul zico (mul meco meco)) (log flops)) "
    "(mul (add meco zen) (add (mul (sqrt snip) (add (add meco zen) (add l2_norm l2_norm))) meco)))"
)

# (zico / l2_norm) * sqrt(meco)
SR_NAS_EQ3 = "(mul (div zico l2_norm) (sqrt meco))"

_EVOLVED = {"sr-nas-eq2": SR_NAS_EQ2, "sr-nas-eq3": SR_NAS_EQ3}


@dataclass(frozen=True)
class NamedProxy:
    """A named scoring formula over a fixed feature list."""

    name: str
    tree: Node


def registry_names() -> tuple[str, ...]:
    """All names accepted by `builtin_proxy`."""
    return BASELINE_FEATURES + tuple(sorted(_EVOLVED))


def builtin_proxy(name: str, feature_names: Sequence[str] = BASELINE_FEATURES) -> NamedProxy:
    """Look up a built-in proxy, bound to the given feature list.

    Raises ValueError (listing the registry) for unknown names, or if the
    feature list lacks a feature the proxy needs.
    """
    if name in _EVOLVED:
        try:
            tree = parse(_EVOLVED[name], feature_names)
        except expr.ParseError:
            missing = sorted(
                set(_required_features(name)) - set(feature_names)
            )
            raise ValueError(
                f"proxy '{name}' needs features {missing} not present in the dataset"
            ) from None
        return NamedProxy(name, tree)
    if name in BASELINE_FEATURES:
        if name not in feature_names:
            raise ValueError(f"baseline proxy '{name}' is not a feature of this dataset")
        return NamedProxy(name, Leaf(list(feature_names).index(name)))
    raise ValueError(
        f"unknown proxy '{name}'; known proxies: {', '.join(registry_names())}"
    )


def _required_features(name: str) -> tuple[str, ...]:
    tokens = _EVOLVED[name].replace("(", " ").replace(")", " ").split()
    return tuple(t for t in tokens if t not in expr.OPERATOR_ARITY)


# ---------------------------------------------------------------------------
# report tables
# ---------------------------------------------------------------------------

@dataclass
class ReportRow:
    name: str
    taus: list[float]
    ranks: list[int]
    avg_rank: float


@dataclass
class ReportTable:
    """Per-problem tau for each proxy, plus an average-rank leaderboard.

    Ranks are dense within each problem (rank 1 = highest tau, ties share
    the better rank); rows are sorted by ascending average rank.  One flat
    table always; optional per-problem group annotations end up in the
    column headers (and a "groups" mapping in the JSON form).
    """

    problem_ids: list[str]
    rows: list[ReportRow]
    problem_groups: list[str | None] | None = None

    def _labels(self) -> list[str]:
        if self.problem_groups is None:
            return self.problem_ids
        return [pid if group is None else f"{pid} [{group}]"
                for pid, group in zip(self.problem_ids, self.problem_groups)]

    def to_json(self) -> dict:
        payload = {
            "problems": self.problem_ids,
            "rows": [
                {
                    "proxy": r.name,
                    "tau": dict(zip(self.problem_ids, r.taus)),
                    "ranks": dict(zip(self.problem_ids, r.ranks)),
                    "avg_rank": r.avg_rank,
                }
                for r in self.rows
            ],
        }
        if self.problem_groups is not None and any(g is not None for g in self.problem_groups):
            payload["groups"] = {pid: g for pid, g in zip(self.problem_ids, self.problem_groups)}
        return payload

    def to_csv(self) -> str:
        header = ["proxy", *self._labels(), "avg_rank"]
        lines = [",".join(header)]
        for r in self.rows:
            cells = [r.name, *(f"{t:.6f}" for t in r.taus), f"{r.avg_rank:.3f}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        header = ["proxy", *self._labels(), "avg_rank"]
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join("---" for _ in header) + "|"]
        for r in self.rows:
            cells = [r.name, *(f"{t:.4f}" for t in r.taus), f"{r.avg_rank:.2f}"]
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"


def _dense_ranks(column: list[float]) -> list[int]:
    distinct = sorted(set(column), reverse=True)
    rank_of = {v: i + 1 for i, v in enumerate(distinct)}
    return [rank_of[v] for v in column]


def evaluate_report(proxies: Sequence[NamedProxy], matrices: Sequence[ProblemMatrix],
                    problem_groups: Sequence[str | None] | None = None) -> ReportTable:
    """Kendall tau of every proxy on every problem, ranked per problem."""
    if not proxies:
        raise ValueError("need at least one proxy")
    names = [p.name for p in proxies]
    if len(set(names)) != len(names):
        raise ValueError("proxy names must be unique within a report")
    taus: list[list[float]] = []
    for proxy in proxies:
        row = []
        for pm in matrices:
            scores = expr.evaluate_batch(proxy.tree, pm.X)
            if not np.isfinite(scores).all():
                row.append(WORST_TAU)
            else:
                row.append(kendall_tau(scores, pm.y))
        taus.append(row)
    rank_columns = [_dense_ranks([taus[i][j] for i in range(len(proxies))])
                    for j in range(len(matrices))]
    rows = []
    for i, proxy in enumerate(proxies):
        ranks = [rank_columns[j][i] for j in range(len(matrices))]
        rows.append(ReportRow(
            name=proxy.name,
            taus=taus[i],
            ranks=ranks,
            avg_rank=float(np.mean(ranks)),
        ))
    rows.sort(key=lambda r: (r.avg_rank, r.name))
    return ReportTable(
        problem_ids=[pm.problem_id for pm in matrices],
        rows=rows,
        problem_groups=list(problem_groups) if problem_groups is not None else None,
    )


# ---------------------------------------------------------------------------
# expression studies
# ---------------------------------------------------------------------------

def feature_frequency(trees: Iterable[Node], feature_names: Sequence[str]) -> dict[str, int]:
    """How many trees mention each feature at least once (not leaf counts)."""
    counts = dict.fromkeys(feature_names, 0)
    any_tree = False
    for tree in trees:
        any_tree = True
        for idx in expr.feature_indices(tree):
            counts[feature_names[idx]] += 1
    if not any_tree:
        raise ValueError("need at least one expression")
    return counts


def substitute_feature(tree: Node, old: str, new: str, feature_names: Sequence[str]) -> Node:
    """Replace every leaf referencing `old` with `new`; structure is untouched."""
    names = list(feature_names)
    try:
        old_idx = names.index(old)
        new_idx = names.index(new)
    except ValueError as e:
        raise ValueError(f"unknown feature in substitution: {e}") from None

    def rec(node: Node) -> Node:
        if isinstance(node, Leaf):
            return Leaf(new_idx) if node.index == old_idx else node
        assert isinstance(node, Op)
        children = tuple(rec(c) for c in node.children)
        if all(c is orig for c, orig in zip(children, node.children)):
            return node
        return Op(node.op, children)

    return rec(tree)
