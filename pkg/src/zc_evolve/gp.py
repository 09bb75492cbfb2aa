"""Generational genetic programming over expression trees.

One generation: binary tournament parent selection, variation (subtree
crossover plus subtree/hoist/point mutation and plain reproduction),
evaluation of the new trees, a bounds update, and elitist survival from the
2N pool of parents and offspring.

Randomness discipline: one master seed; every generation derives separate
substreams for pairing and variation (and generation 0 one for
initialization), so evaluation parallelism can never perturb the random
sequence.  Raw tau vectors are cached on the individual and never
recomputed; normalized scores are recomputed at every selection event
because the normalization bounds drift.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dataset import ProblemMatrix
from .expr import (
    BINARY_OPS,
    MAX_DEPTH,
    MIN_DEPTH,
    UNARY_OPS,
    Leaf,
    Node,
    Op,
    TreeGenConfig,
    grow_fragment,
    iter_nodes,
    print_canonical,
    random_tree,
    replace_at,
    structure_key,
)
from .fitness import ScoreBounds, raw_tau_vector

logger = logging.getLogger(__name__)

_VALIDITY_RETRIES = 10
_INIT_DEDUP_RETRIES = 20
_SUBTREE_FRAGMENT_MAX_DEPTH = 4

# substream purposes for per-generation RNGs
_PURPOSE_INIT, _PURPOSE_PAIRING, _PURPOSE_VARIATION = 0, 1, 2

SURVIVAL_MODES = ("truncation", "tournament")


@dataclass(frozen=True)
class GpConfig:
    """All evolution hyperparameters.

    The four variation probabilities may sum to less than 1; the remainder
    is the probability of plain reproduction (copying a parent unchanged).
    """

    pop_size: int = 100
    generations: int = 50
    p_crossover: float = 0.6
    p_subtree: float = 0.15
    p_hoist: float = 0.1
    p_point: float = 0.1
    tree_gen: TreeGenConfig = field(default_factory=TreeGenConfig)
    max_depth: int = MAX_DEPTH
    seed: int = 0
    survival: str = "truncation"

    def __post_init__(self) -> None:
        if self.pop_size < 2 or self.pop_size % 2 != 0:
            raise ValueError(f"pop_size must be an even integer >= 2, got {self.pop_size}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        probs = (self.p_crossover, self.p_subtree, self.p_hoist, self.p_point)
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ValueError("variation probabilities must be in [0, 1]")
        if sum(probs) > 1.0 + 1e-12:
            raise ValueError(f"variation probabilities sum to {sum(probs)} > 1")
        if self.max_depth != MAX_DEPTH:
            raise ValueError(f"max_depth is fixed at {MAX_DEPTH}")
        if self.tree_gen.max_depth_init > self.max_depth:
            raise ValueError("tree_gen.max_depth_init exceeds max_depth")
        if self.survival not in SURVIVAL_MODES:
            raise ValueError(f"survival must be one of {SURVIVAL_MODES}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    @property
    def p_reproduce(self) -> float:
        return max(0.0, 1.0 - (self.p_crossover + self.p_subtree + self.p_hoist + self.p_point))


@dataclass
class Individual:
    """A tree plus its cached per-problem raw tau vector."""

    tree: Node
    raw_tau: np.ndarray
    birth_generation: int
    canon: str


@dataclass
class GenerationRecord:
    """Per-generation summary, serialized verbatim into the run log."""

    gen: int
    best_score: float
    mean_score: float
    best_tau: dict[str, float]
    distinct_individuals: int
    best_expr: str


@dataclass
class SearchResult:
    """Outcome of one evolution run."""

    best: Individual
    history: list[GenerationRecord]
    final_bounds: ScoreBounds
    n_evaluations: int


def _substream(seed: int, generation: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, generation, purpose)))


def _rank_key(ind: Individual, score: float) -> tuple[float, int, str]:
    # total order: score desc, then tree size asc (parsimony), then canon asc
    return (-score, ind.tree.size, ind.canon)


def _is_valid(tree: Node, max_depth: int) -> bool:
    return MIN_DEPTH <= tree.depth <= max_depth


def _choose_node(tree: Node, rng: np.random.Generator) -> tuple[Node, tuple[int, ...]]:
    nodes = list(iter_nodes(tree))
    return nodes[int(rng.integers(len(nodes)))]


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------

def crossover(a: Node, b: Node, rng: np.random.Generator,
              max_depth: int = MAX_DEPTH) -> tuple[Node, Node]:
    """Swap uniformly chosen subtrees between two parents.

    If a swap would push either child outside the depth bounds the node
    choice is retried; after the retry budget both parents come back
    unchanged, keeping the operator closed over valid trees.
    """
    for _ in range(_VALIDITY_RETRIES):
        node_a, path_a = _choose_node(a, rng)
        node_b, path_b = _choose_node(b, rng)
        child_a = replace_at(a, path_a, node_b)
        child_b = replace_at(b, path_b, node_a)
        if _is_valid(child_a, max_depth) and _is_valid(child_b, max_depth):
            return child_a, child_b
    return a, b


def subtree_mutation(tree: Node, rng: np.random.Generator, n_features: int,
                     max_depth: int = MAX_DEPTH) -> Node:
    """Replace a uniformly chosen subtree with a fresh grown fragment (depth <= 4)."""
    for _ in range(_VALIDITY_RETRIES):
        _, path = _choose_node(tree, rng)
        target = int(rng.integers(1, _SUBTREE_FRAGMENT_MAX_DEPTH + 1))
        fragment = grow_fragment(rng, target, n_features)
        candidate = replace_at(tree, path, fragment)
        if _is_valid(candidate, max_depth):
            return candidate
    return tree


def hoist_mutation(tree: Node, rng: np.random.Generator,
                   max_depth: int = MAX_DEPTH) -> Node:
    """Replace a chosen subtree s by a subtree of s (never grows the tree)."""
    for _ in range(_VALIDITY_RETRIES):
        subtree, path = _choose_node(tree, rng)
        hoisted, _ = _choose_node(subtree, rng)
        candidate = replace_at(tree, path, hoisted)
        if _is_valid(candidate, max_depth):
            return candidate
    return tree


def point_mutation(tree: Node, rng: np.random.Generator, n_features: int) -> Node:
    """Swap one node in place: operator for a different same-arity operator, leaf for a leaf."""
    node, path = _choose_node(tree, rng)
    if isinstance(node, Op):
        pool = BINARY_OPS if node.op in BINARY_OPS else UNARY_OPS
        alternatives = [op for op in pool if op != node.op]
        new_op = alternatives[int(rng.integers(len(alternatives)))]
        return replace_at(tree, path, Op(new_op, node.children))
    if n_features < 2:
        return tree
    assert isinstance(node, Leaf)
    shifted = int(rng.integers(n_features - 1))
    new_index = shifted if shifted < node.index else shifted + 1
    return replace_at(tree, path, Leaf(new_index))


# ---------------------------------------------------------------------------
# population mechanics
# ---------------------------------------------------------------------------

def initialize(config: GpConfig, n_features: int, rng: np.random.Generator) -> list[Node]:
    """Ramped half-and-half population; duplicates are regenerated a few times, then admitted."""
    trees: list[Node] = []
    seen: set[str] = set()
    for _ in range(config.pop_size):
        tree = random_tree(rng, config.tree_gen, n_features)
        for _ in range(_INIT_DEDUP_RETRIES - 1):
            if structure_key(tree) not in seen:
                break
            tree = random_tree(rng, config.tree_gen, n_features)
        seen.add(structure_key(tree))
        trees.append(tree)
    return trees


def binary_tournament(pool: Sequence[tuple[Individual, float]], count: int,
                      rng: np.random.Generator) -> list[Individual]:
    """Rounds of random disjoint pairings; each pair's better member is emitted.

    Reshuffles until `count` winners are collected, truncating any excess.
    Ties break toward the smaller tree, then the lexicographically smaller
    canonical string.
    """
    if not pool or count < 1:
        raise ValueError("pool must be non-empty and count >= 1")
    winners: list[Individual] = []
    while len(winners) < count:
        order = rng.permutation(len(pool))
        for k in range(0, len(pool) - 1, 2):
            a, sa = pool[order[k]]
            b, sb = pool[order[k + 1]]
            winners.append(a if _rank_key(a, sa) <= _rank_key(b, sb) else b)
        if len(pool) < 2:  # degenerate single-member pool
            winners.append(pool[0][0])
    del winners[count:]
    return winners


def _mutate_one(parent: Individual, config: GpConfig, rng: np.random.Generator,
                n_features: int) -> Node:
    # conditional draw among {subtree, hoist, point, reproduce} given no crossover
    remainder = 1.0 - config.p_crossover
    if remainder <= 0.0:
        return parent.tree
    r = rng.random() * remainder
    if r < config.p_subtree:
        return subtree_mutation(parent.tree, rng, n_features, config.max_depth)
    r -= config.p_subtree
    if r < config.p_hoist:
        return hoist_mutation(parent.tree, rng, config.max_depth)
    r -= config.p_hoist
    if r < config.p_point:
        return point_mutation(parent.tree, rng, n_features)
    return parent.tree  # reproduction


def _make_offspring(parents: list[Individual], config: GpConfig,
                    rng: np.random.Generator, n_features: int) -> list[tuple[Node, Individual | None]]:
    """Pair consecutive parents; crossover with p_crossover, else mutate each independently.

    Returns (tree, source) pairs where source is the parent whose cached tau
    can be reused because the tree came through unchanged.
    """
    out: list[tuple[Node, Individual | None]] = []
    for i in range(0, len(parents), 2):
        a, b = parents[i], parents[i + 1]
        if rng.random() < config.p_crossover:
            child_a, child_b = crossover(a.tree, b.tree, rng, config.max_depth)
            out.append((child_a, a if child_a is a.tree else None))
            out.append((child_b, b if child_b is b.tree else None))
        else:
            for parent in (a, b):
                tree = _mutate_one(parent, config, rng, n_features)
                out.append((tree, parent if tree is parent.tree else None))
    return out


def _survival(pool: list[tuple[Individual, float]], pop_size: int, mode: str,
              rng: np.random.Generator) -> list[Individual]:
    if mode == "truncation":
        ranked = sorted(pool, key=lambda pair: _rank_key(pair[0], pair[1]))
        return [ind for ind, _ in ranked[:pop_size]]
    # literal pairwise reading: one shuffle of the 2N pool into N pairs
    order = rng.permutation(len(pool))
    survivors = []
    for k in range(0, len(pool) - 1, 2):
        a, sa = pool[order[k]]
        b, sb = pool[order[k + 1]]
        survivors.append(a if _rank_key(a, sa) <= _rank_key(b, sb) else b)
    return survivors[:pop_size]


# ---------------------------------------------------------------------------
# evolution loop
# ---------------------------------------------------------------------------

def _evaluate_trees(trees: Sequence[Node], matrices: Sequence[ProblemMatrix],
                    jobs: int, generation: int) -> list[np.ndarray]:
    try:
        if jobs <= 1 or len(trees) < 2:
            return [raw_tau_vector(t, matrices) for t in trees]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: raw_tau_vector(t, matrices), trees))
    except Exception as e:
        raise RuntimeError(f"fitness evaluation failed at generation {generation}: {e}") from e


def _record(gen: int, population: list[Individual], bounds: ScoreBounds,
            problem_ids: Sequence[str]) -> GenerationRecord:
    scores = [bounds.score(ind.raw_tau) for ind in population]
    ranked = sorted(zip(population, scores), key=lambda pair: _rank_key(pair[0], pair[1]))
    best, best_score = ranked[0]
    return GenerationRecord(
        gen=gen,
        best_score=best_score,
        mean_score=float(np.mean(scores)),
        best_tau={pid: float(t) for pid, t in zip(problem_ids, best.raw_tau)},
        distinct_individuals=len({ind.canon for ind in population}),
        best_expr=best.canon,
    )


Observer = Callable[[int, list[Individual], list[Individual], list[Individual]], None]


def evolve(config: GpConfig, matrices: Sequence[ProblemMatrix],
           feature_names: Sequence[str], *, jobs: int = 1,
           freeze_bounds: bool = False,
           observer: Observer | None = None) -> SearchResult:
    """Run the full generational loop and return the best tree of the final population.

    `freeze_bounds` pins the normalization bounds right after the initial
    population (a test mode that makes scores comparable across
    generations).  `observer(gen, parents, offspring, population)` is called
    once per generation for instrumentation.
    """
    if not matrices:
        raise ValueError("need at least one problem")
    n_features = len(feature_names)
    for pm in matrices:
        if pm.X.shape[1] != n_features:
            raise ValueError(
                f"problem '{pm.problem_id}' has {pm.X.shape[1]} feature columns, "
                f"expected {n_features}"
            )
    problem_ids = [pm.problem_id for pm in matrices]

    trees = initialize(config, n_features, _substream(config.seed, 0, _PURPOSE_INIT))
    taus = _evaluate_trees(trees, matrices, jobs, generation=0)
    n_evaluations = len(taus)
    population = [
        Individual(t, tau, 0, print_canonical(t, feature_names))
        for t, tau in zip(trees, taus)
    ]
    bounds = ScoreBounds().update_all(np.stack(taus))
    history = [_record(0, population, bounds, problem_ids)]
    if observer is not None:
        observer(0, [], [], population)

    for gen in range(1, config.generations + 1):
        pairing_rng = _substream(config.seed, gen, _PURPOSE_PAIRING)
        variation_rng = _substream(config.seed, gen, _PURPOSE_VARIATION)

        scores = [bounds.score(ind.raw_tau) for ind in population]
        parents = binary_tournament(list(zip(population, scores)), config.pop_size, pairing_rng)

        planned = _make_offspring(parents, config, variation_rng, n_features)
        fresh_trees = [tree for tree, source in planned if source is None]
        fresh_taus = iter(_evaluate_trees(fresh_trees, matrices, jobs, generation=gen))
        n_evaluations += len(fresh_trees)
        offspring = []
        for tree, source in planned:
            tau = source.raw_tau if source is not None else next(fresh_taus)
            offspring.append(Individual(tree, tau, gen, print_canonical(tree, feature_names)))

        if not freeze_bounds:
            bounds = bounds.update_all(np.stack([o.raw_tau for o in offspring]))

        pool = parents + offspring
        pool_scores = [bounds.score(ind.raw_tau) for ind in pool]
        population = _survival(list(zip(pool, pool_scores)), config.pop_size,
                               config.survival, pairing_rng)

        history.append(_record(gen, population, bounds, problem_ids))
        if observer is not None:
            observer(gen, parents, offspring, population)
        logger.debug("generation %d: best %.4f mean %.4f", gen,
                     history[-1].best_score, history[-1].mean_score)

    final_scores = [bounds.score(ind.raw_tau) for ind in population]
    ranked = sorted(zip(population, final_scores), key=lambda pair: _rank_key(pair[0], pair[1]))
    best = ranked[0][0]
    return SearchResult(best=best, history=history, final_bounds=bounds,
                        n_evaluations=n_evaluations)
