"""Expression-tree genotype: protected operators, evaluation, text form, random generation.

A tree combines feature columns (leaves) with a closed set of seven
arithmetic operators (internal nodes).  There are no constant leaves, and a
synthesized tree must have depth between 2 and 10, where a lone leaf counts
as depth 1.  Trees are immutable values: every variation operator builds a
new tree and evaluation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

BINARY_OPS = ("add", "sub", "mul", "div")
UNARY_OPS = ("neg", "log", "sqrt")
OPERATOR_ARITY = {**{op: 2 for op in BINARY_OPS}, **{op: 1 for op in UNARY_OPS}}

MIN_DEPTH = 2
MAX_DEPTH = 10
PROTECT_EPS = 1e-6


class ExprError(ValueError):
    """Invalid expression tree or evaluation request."""


class ParseError(ExprError):
    """Malformed expression text."""


class Node:
    """Base class for tree nodes."""

    __slots__ = ()

    depth: int
    size: int


class Leaf(Node):
    """A feature reference (an index into the dataset's feature names)."""

    __slots__ = ("index",)

    depth = 1
    size = 1

    def __init__(self, index: int):
        if index < 0:
            raise ExprError(f"negative feature index {index}")
        self.index = index

    def __repr__(self) -> str:
        return f"Leaf({self.index})"


class Op(Node):
    """An operator applied to arity-many child subtrees."""

    __slots__ = ("op", "children", "depth", "size")

    def __init__(self, op: str, children: tuple[Node, ...]):
        arity = OPERATOR_ARITY.get(op)
        if arity is None:
            raise ExprError(f"unknown operator '{op}'")
        if len(children) != arity:
            raise ExprError(f"operator '{op}' takes {arity} operand(s), got {len(children)}")
        self.op = op
        self.children = children
        self.depth = 1 + max(c.depth for c in children)
        self.size = 1 + sum(c.size for c in children)

    def __repr__(self) -> str:
        return f"Op({self.op!r}, {self.children!r})"


def depth(tree: Node) -> int:
    """Tree depth; a lone leaf has depth 1."""
    return tree.depth


def size(tree: Node) -> int:
    """Number of nodes."""
    return tree.size


def feature_indices(tree: Node) -> frozenset[int]:
    """Set of feature indices referenced by the tree's leaves."""
    if isinstance(tree, Leaf):
        return frozenset((tree.index,))
    out: set[int] = set()
    stack: list[Node] = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.add(node.index)
        else:
            stack.extend(node.children)  # type: ignore[union-attr]
    return frozenset(out)


def iter_nodes(tree: Node) -> Iterator[tuple[Node, tuple[int, ...]]]:
    """Yield (node, path) pairs in preorder; path is the child-index route from the root."""
    stack: list[tuple[Node, tuple[int, ...]]] = [(tree, ())]
    while stack:
        node, path = stack.pop()
        yield node, path
        if isinstance(node, Op):
            for i in range(len(node.children) - 1, -1, -1):
                stack.append((node.children[i], path + (i,)))


def replace_at(tree: Node, path: tuple[int, ...], replacement: Node) -> Node:
    """Return a copy of `tree` with the subtree at `path` swapped for `replacement`."""
    if not path:
        return replacement
    if not isinstance(tree, Op):
        raise ExprError(f"path {path} descends below a leaf")
    i = path[0]
    children = list(tree.children)
    children[i] = replace_at(children[i], path[1:], replacement)
    return Op(tree.op, tuple(children))


def validate(tree: Node, n_features: int, *, min_depth: int = MIN_DEPTH, max_depth: int = MAX_DEPTH) -> None:
    """Check genotype rules: depth within bounds and every leaf index in range."""
    if not min_depth <= tree.depth <= max_depth:
        raise ExprError(f"tree depth {tree.depth} outside [{min_depth}, {max_depth}]")
    bad = [i for i in feature_indices(tree) if i >= n_features]
    if bad:
        raise ExprError(f"feature index {max(bad)} out of range for {n_features} features")


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

def print_canonical(tree: Node, feature_names: Sequence[str]) -> str:
    """Single-line lowercase prefix s-expression; injective on distinct trees."""
    if isinstance(tree, Leaf):
        return feature_names[tree.index]
    parts = " ".join(print_canonical(c, feature_names) for c in tree.children)  # type: ignore[union-attr]
    return f"({tree.op} {parts})"  # type: ignore[union-attr]


def structure_key(tree: Node) -> str:
    """Name-independent canonical form, used for duplicate detection."""
    if isinstance(tree, Leaf):
        return f"#{tree.index}"
    parts = " ".join(structure_key(c) for c in tree.children)  # type: ignore[union-attr]
    return f"({tree.op} {parts})"  # type: ignore[union-attr]


_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_ATOM = 1, 2, 3, 4
_INFIX_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def print_infix(tree: Node, feature_names: Sequence[str]) -> str:
    """Human-oriented infix rendering with minimal parentheses (not injective)."""

    def rec(node: Node) -> tuple[str, int]:
        if isinstance(node, Leaf):
            return feature_names[node.index], _PREC_ATOM
        assert isinstance(node, Op)
        if node.op in ("log", "sqrt"):
            inner, _ = rec(node.children[0])
            return f"{node.op}({inner})", _PREC_ATOM
        if node.op == "neg":
            inner, prec = rec(node.children[0])
            if prec < _PREC_ATOM:
                inner = f"({inner})"
            return f"-{inner}", _PREC_NEG
        prec = _PREC_ADD if node.op in ("add", "sub") else _PREC_MUL
        left, lp = rec(node.children[0])
        right, rp = rec(node.children[1])
        if lp < prec:
            left = f"({left})"
        # right side needs parentheses unless strictly tighter, or the same
        # associative operator (a + (b + c) prints as a + b + c)
        right_op = node.children[1].op if isinstance(node.children[1], Op) else None
        if rp < prec or (rp == prec and not (node.op in ("add", "mul") and right_op == node.op)):
            right = f"({right})"
        return f"{left} {_INFIX_SYMBOL[node.op]} {right}", prec

    return rec(tree)[0]


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def load_expressions(path, feature_names: Sequence[str]) -> list[tuple[int, "Node"]]:
    """Read an expression file: one s-expression per line, '#' comments allowed.

    Returns (line_number, tree) pairs; parse failures carry the offending
    line number in the message.
    """
    out: list[tuple[int, Node]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                out.append((line_no, parse(text, feature_names)))
            except ParseError as e:
                raise ParseError(f"{path}:{line_no}: {e}") from None
    if not out:
        raise ParseError(f"{path}: no expressions found")
    return out


def parse(text: str, feature_names: Sequence[str]) -> Node:
    """Parse a prefix s-expression into a tree and validate the genotype rules.

    Rejects unknown symbols, wrong operator arity, constant literals, and
    trees whose depth falls outside [2, 10].
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    name_to_index = {name: i for i, name in enumerate(feature_names)}

    def atom(token: str) -> Node:
        idx = name_to_index.get(token)
        if idx is not None:
            return Leaf(idx)
        if token in OPERATOR_ARITY:
            raise ParseError(f"operator '{token}' used without parentheses")
        try:
            float(token)
        except ValueError:
            raise ParseError(f"unknown symbol '{token}'") from None
        raise ParseError(f"constant '{token}' not allowed: leaves must be features")

    # stack of (operator, collected children) for each open parenthesis
    stack: list[tuple[str, list[Node]]] = []
    result: Node | None = None
    pos = 0
    while pos < len(tokens):
        token = tokens[pos]
        if result is not None:
            raise ParseError(f"unexpected token '{token}' after complete expression")
        if token == "(":
            if pos + 1 >= len(tokens) or tokens[pos + 1] in ("(", ")"):
                raise ParseError("expected an operator after '('")
            op = tokens[pos + 1]
            if op not in OPERATOR_ARITY:
                raise ParseError(f"unknown operator '{op}'")
            stack.append((op, []))
            pos += 2
            continue
        if token == ")":
            if not stack:
                raise ParseError("unbalanced ')'")
            op, children = stack.pop()
            if len(children) != OPERATOR_ARITY[op]:
                raise ParseError(
                    f"operator '{op}' takes {OPERATOR_ARITY[op]} operand(s), got {len(children)}"
                )
            node: Node = Op(op, tuple(children))
            if stack:
                stack[-1][1].append(node)
            else:
                result = node
        else:
            node = atom(token)
            if stack:
                stack[-1][1].append(node)
            else:
                result = node
        pos += 1
    if stack:
        raise ParseError("unbalanced '(': expression ends inside an operator")
    assert result is not None
    if not MIN_DEPTH <= result.depth <= MAX_DEPTH:
        raise ParseError(f"tree depth {result.depth} outside [{MIN_DEPTH}, {MAX_DEPTH}]")
    return result


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _protected_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(np.abs(b) > PROTECT_EPS, np.divide(a, b), 1.0)


def _protected_log(x: np.ndarray) -> np.ndarray:
    ax = np.abs(x)
    return np.where(ax > PROTECT_EPS, np.log(np.where(ax > PROTECT_EPS, ax, 1.0)), 0.0)


def _protected_sqrt(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.abs(x))


_APPLY = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
    "div": _protected_div,
    "neg": np.negative,
    "log": _protected_log,
    "sqrt": _protected_sqrt,
}


def evaluate_batch(tree: Node, matrix: np.ndarray) -> np.ndarray:
    """Evaluate the tree on every row of an (n, d) matrix.

    Protected operator semantics keep single applications total; if an
    intermediate still overflows the finite range anywhere, the affected
    rows come back as NaN (the non-finite marker) rather than raising.
    """
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2:
        raise ExprError(f"expected a 2-D matrix, got shape {X.shape}")
    used = feature_indices(tree)
    if used and max(used) >= X.shape[1]:
        raise ExprError(f"tree references feature {max(used)} but matrix has {X.shape[1]} columns")
    n = X.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.float64)

    bad = np.zeros(n, dtype=bool)

    def rec(node: Node) -> np.ndarray:
        nonlocal bad
        if isinstance(node, Leaf):
            return X[:, node.index]
        assert isinstance(node, Op)
        values = _APPLY[node.op](*(rec(c) for c in node.children))
        bad |= ~np.isfinite(values)
        return values

    with np.errstate(all="ignore"):
        out = rec(tree)
    if bad.any():
        out = out.copy()
        out[bad] = np.nan
    elif out.base is not None:  # bare-leaf tree returns a column view
        out = out.copy()
    return out


def evaluate(tree: Node, features: Sequence[float] | np.ndarray) -> float:
    """Evaluate the tree on a single feature row (NaN marks an overflowed result)."""
    row = np.asarray(features, dtype=np.float64)
    if row.ndim != 1:
        raise ExprError(f"expected a 1-D feature row, got shape {row.shape}")
    used = feature_indices(tree)
    if used and max(used) >= row.shape[0]:
        raise ExprError(f"tree references feature {max(used)} but row has {row.shape[0]} entries")
    return float(evaluate_batch(tree, row[None, :])[0])


# ---------------------------------------------------------------------------
# random generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeGenConfig:
    """Random-tree generation settings.

    min_depth is fixed at 2 by the genotype rules; max_depth_init bounds the
    target depth used at initialization and max_depth the hard genotype cap.
    """

    min_depth: int = MIN_DEPTH
    max_depth_init: int = 6
    max_depth: int = MAX_DEPTH
    method: str = "ramped_half_and_half"

    def __post_init__(self) -> None:
        if self.min_depth != MIN_DEPTH:
            raise ValueError(f"min_depth is fixed at {MIN_DEPTH}")
        if not MIN_DEPTH <= self.max_depth_init <= self.max_depth:
            raise ValueError(
                f"require {MIN_DEPTH} <= max_depth_init <= max_depth, "
                f"got max_depth_init={self.max_depth_init}, max_depth={self.max_depth}"
            )
        if self.max_depth > MAX_DEPTH:
            raise ValueError(f"max_depth cannot exceed {MAX_DEPTH}")
        if self.method not in ("full", "grow", "ramped_half_and_half"):
            raise ValueError(f"unknown generation method '{self.method}'")


def _random_op(rng: np.random.Generator) -> str:
    ops = BINARY_OPS + UNARY_OPS
    return ops[int(rng.integers(len(ops)))]


def _gen(rng: np.random.Generator, level: int, target: int, n_features: int,
         full: bool, min_depth: int) -> Node:
    if level >= target:
        return Leaf(int(rng.integers(n_features)))
    if level >= min_depth and not full and rng.random() < 0.5:
        return Leaf(int(rng.integers(n_features)))
    op = _random_op(rng)
    children = tuple(
        _gen(rng, level + 1, target, n_features, full, min_depth)
        for _ in range(OPERATOR_ARITY[op])
    )
    return Op(op, children)


def grow_fragment(rng: np.random.Generator, target_depth: int, n_features: int) -> Node:
    """A `grow`-style subtree of depth at most `target_depth` (may be a bare leaf)."""
    return _gen(rng, 1, target_depth, n_features, full=False, min_depth=1)


def random_tree(rng: np.random.Generator, config: TreeGenConfig, n_features: int) -> Node:
    """Generate a valid tree with depth in [config.min_depth, config.max_depth_init].

    `full` places operators on every level up to a sampled target depth;
    `grow` chooses operator vs leaf uniformly below the target (the first
    levels are forced to operators so the minimum depth holds); ramped
    half-and-half mixes both methods over a uniform ramp of target depths.
    """
    if n_features < 1:
        raise ValueError("need at least one feature")
    target = int(rng.integers(config.min_depth, config.max_depth_init + 1))
    if config.method == "ramped_half_and_half":
        full = bool(rng.random() < 0.5)
    else:
        full = config.method == "full"
    return _gen(rng, 1, target, n_features, full=full, min_depth=config.min_depth)
