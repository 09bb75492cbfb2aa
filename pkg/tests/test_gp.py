import numpy as np
import pytest
from conftest import ScriptedRng, make_dataset

from zc_evolve import gp
from zc_evolve.expr import MIN_DEPTH, Leaf, Op, TreeGenConfig, parse, print_canonical, structure_key
from zc_evolve.fitness import ScoreBounds
from zc_evolve.gp import (
    GpConfig,
    Individual,
    binary_tournament,
    crossover,
    evolve,
    hoist_mutation,
    initialize,
    point_mutation,
    subtree_mutation,
)
from zc_evolve.zoo import BASELINE_FEATURES

NAMES = BASELINE_FEATURES


def _ind(text, tau=(0.0,), gen=0):
    tree = parse(text, NAMES)
    return Individual(tree, np.asarray(tau, float), gen, print_canonical(tree, NAMES))


def _neg_chain(depth):
    node = Leaf(0)
    for _ in range(depth - 1):
        node = Op("neg", (node,))
    return node


def _random_trees(count, seed=0, n_features=16):
    rng = np.random.default_rng(seed)
    cfg = TreeGenConfig()
    return [gp.random_tree(rng, cfg, n_features) for _ in range(count)]


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def test_config_rejects_odd_population():
    with pytest.raises(ValueError, match="even"):
        GpConfig(pop_size=101)


def test_config_rejects_probability_overflow():
    with pytest.raises(ValueError, match="sum"):
        GpConfig(p_crossover=0.9, p_subtree=0.2)


def test_config_rejects_bad_survival():
    with pytest.raises(ValueError, match="survival"):
        GpConfig(survival="roulette")


def test_config_reproduce_is_remainder():
    cfg = GpConfig()
    assert cfg.p_reproduce == pytest.approx(0.05)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def test_initialize_depths_and_count():
    cfg = GpConfig(pop_size=100)
    trees = initialize(cfg, 16, np.random.default_rng(0))
    assert len(trees) == 100
    assert all(2 <= t.depth <= cfg.tree_gen.max_depth_init for t in trees)


def test_initialize_determinism():
    cfg = GpConfig(pop_size=50)
    a = initialize(cfg, 16, np.random.default_rng(7))
    b = initialize(cfg, 16, np.random.default_rng(7))
    assert [structure_key(t) for t in a] == [structure_key(t) for t in b]


def test_initialize_single_feature():
    cfg = GpConfig(pop_size=2)
    trees = initialize(cfg, 1, np.random.default_rng(0))
    assert len(trees) == 2
    for t in trees:
        assert all(isinstance(n, Op) or n.index == 0 for n, _ in gp.iter_nodes(t))


def test_initialize_discourages_duplicates():
    cfg = GpConfig(pop_size=40)
    trees = initialize(cfg, 16, np.random.default_rng(1))
    keys = {structure_key(t) for t in trees}
    assert len(keys) > 30  # plenty of distinct structures out of 40


# ---------------------------------------------------------------------------
# selection
# ---------------------------------------------------------------------------

def test_tournament_picks_higher_score():
    pool = [(_ind("(neg snip)"), 1.0), (_ind("(neg meco)"), 2.0)]
    winners = binary_tournament(pool, 1, np.random.default_rng(0))
    assert winners[0].canon == "(neg meco)"


def test_tournament_two_rounds_of_disjoint_pairs():
    inds = [_ind(f"(neg {name})") for name in ("snip", "meco", "zen", "zico")]
    pool = [(ind, float(i)) for i, ind in enumerate(inds)]
    winners = binary_tournament(pool, 4, np.random.default_rng(3))
    assert len(winners) == 4
    # each round pairs the pool disjointly, so a round's winners are distinct
    assert len({w.canon for w in winners[:2]}) == 2
    assert len({w.canon for w in winners[2:]}) == 2


def test_tournament_tie_breaks_to_smaller_tree():
    small = _ind("(neg snip)")
    big = _ind("(add (mul snip snip) (neg snip))")
    winners = binary_tournament([(big, 1.0), (small, 1.0)], 2, np.random.default_rng(0))
    assert all(w.canon == small.canon for w in winners)


# ---------------------------------------------------------------------------
# variation operators
# ---------------------------------------------------------------------------

def test_crossover_swap_at_both_roots_swaps_parents():
    a = parse("(mul snip (add snip meco))", NAMES)
    b = parse("(neg zen)", NAMES)
    # script both node choices to the roots (index 0 into the node lists)
    c1, c2 = crossover(a, b, ScriptedRng([0, 0]))
    assert c1 is b and c2 is a


def test_crossover_retries_exhausted_returns_parents():
    a = _neg_chain(10)
    b = _neg_chain(10)
    # always pick a's root and b's deepest leaf: one child is a bare leaf,
    # the other has depth 19 -- never valid, so the parents come back
    leaf_index = len(list(gp.iter_nodes(b))) - 1
    c1, c2 = crossover(a, b, ScriptedRng([0, leaf_index]))
    assert c1 is a and c2 is b


def test_crossover_seeded_children_are_valid():
    a = parse("(mul snip (add snip meco))", NAMES)
    b = parse("(neg zen)", NAMES)
    for seed in range(30):
        c1, c2 = crossover(a, b, np.random.default_rng(seed))
        for child in (c1, c2):
            assert MIN_DEPTH <= child.depth <= 10


def test_subtree_mutation_validity():
    for i, tree in enumerate(_random_trees(50)):
        out = subtree_mutation(tree, np.random.default_rng(i), 16)
        assert MIN_DEPTH <= out.depth <= 10


def test_hoist_example():
    tree = parse("(neg (sqrt meco))", NAMES)
    # choose s = whole tree, then s' = its child subtree "(sqrt meco)"
    out = hoist_mutation(tree, ScriptedRng([0, 1]))
    assert print_canonical(out, NAMES) == "(sqrt meco)"


def test_hoist_never_grows():
    for i, tree in enumerate(_random_trees(2000)):
        out = hoist_mutation(tree, np.random.default_rng(i))
        assert out.size <= tree.size
        assert MIN_DEPTH <= out.depth <= 10


def test_point_mutation_root_same_arity():
    tree = parse("(add snip meco)", NAMES)
    seen = set()
    for seed in range(40):
        out = point_mutation(tree, np.random.default_rng(seed), 16)
        assert isinstance(out, Op)
        if out.op != "add":
            assert out.children == tree.children
            seen.add(out.op)
    assert seen <= {"sub", "mul", "div"} and seen


def test_point_mutation_leaf_changes_feature():
    tree = parse("(neg snip)", NAMES)
    for seed in range(20):
        out = point_mutation(tree, ScriptedRng([1, seed % 15]), 16)
        leaf = out.children[0]
        assert isinstance(leaf, Leaf)
        assert leaf.index != NAMES.index("snip")


def test_point_mutation_single_feature_is_identity_on_leaf():
    tree = parse("(neg x)", ("x",))
    out = point_mutation(tree, ScriptedRng([1]), 1)
    assert out is tree


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

def _monotone_dataset(n=30, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.5, 2.0, size=(n, 3))
    y = X[:, 1].copy()  # feature f1 equals the target
    return make_dataset({"p": (X, y)})


def ds_matrices(d):
    from zc_evolve.dataset import full_view

    return full_view(d).matrices()


def test_evolve_smoke_history_length():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=2, generations=1, seed=0)
    res = evolve(cfg, ds_matrices(d), d.feature_names)
    assert len(res.history) == 2
    assert res.history[0].gen == 0 and res.history[1].gen == 1


def test_evolve_determinism():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=20, generations=5, seed=11)
    r1 = evolve(cfg, ds_matrices(d), d.feature_names)
    r2 = evolve(cfg, ds_matrices(d), d.feature_names)
    assert r1.best.canon == r2.best.canon
    assert [h.best_expr for h in r1.history] == [h.best_expr for h in r2.history]
    assert [h.best_score for h in r1.history] == [h.best_score for h in r2.history]


def test_evolve_parallel_matches_serial():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=20, generations=4, seed=2)
    r1 = evolve(cfg, ds_matrices(d), d.feature_names, jobs=1)
    r8 = evolve(cfg, ds_matrices(d), d.feature_names, jobs=8)
    assert [h.best_expr for h in r1.history] == [h.best_expr for h in r8.history]
    assert r1.best.raw_tau.tolist() == r8.best.raw_tau.tolist()


def test_evolve_finds_monotone_feature():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=20, generations=10, seed=1)
    res = evolve(cfg, ds_matrices(d), d.feature_names)
    assert res.best.raw_tau[0] == 1.0


def test_frozen_bounds_elitism_over_seeds():
    d = _monotone_dataset()
    for seed in range(10):
        cfg = GpConfig(pop_size=20, generations=8, seed=seed)
        res = evolve(cfg, ds_matrices(d), d.feature_names, freeze_bounds=True)
        scores = [h.best_score for h in res.history]
        assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))


def test_evolve_invariants_via_observer():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=20, generations=6, seed=5)
    violations = []
    pools = {}

    def observer(gen, parents, offspring, population):
        for ind in [*parents, *offspring, *population]:
            if not MIN_DEPTH <= ind.tree.depth <= 10:
                violations.append((gen, ind.canon))
        if gen > 0:
            pool_keys = {structure_key(i.tree) for i in parents} | {
                structure_key(i.tree) for i in offspring
            }
            for ind in population:
                if structure_key(ind.tree) not in pool_keys:
                    violations.append((gen, "provenance", ind.canon))
        pools[gen] = len(population)

    res = evolve(cfg, ds_matrices(d), d.feature_names, observer=observer)
    assert not violations
    assert all(count == 20 for count in pools.values())
    assert res.n_evaluations <= cfg.pop_size * (cfg.generations + 1)


def test_evolve_tournament_survival_mode():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=20, generations=4, seed=3, survival="tournament")
    res = evolve(cfg, ds_matrices(d), d.feature_names)
    assert len(res.history) == 5
    assert res.n_evaluations <= cfg.pop_size * (cfg.generations + 1)


def test_evolve_rejects_empty_problems():
    with pytest.raises(ValueError, match="at least one problem"):
        evolve(GpConfig(pop_size=2, generations=1), [], ("a", "b"))


def test_record_fields():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=10, generations=2, seed=0)
    res = evolve(cfg, ds_matrices(d), d.feature_names)
    record = res.history[-1]
    assert set(record.best_tau) == {"p"}
    assert 1 <= record.distinct_individuals <= 10
    assert record.best_expr.startswith("(")


def test_scorebounds_only_widen_during_run():
    d = _monotone_dataset()
    cfg = GpConfig(pop_size=10, generations=5, seed=4)
    res = evolve(cfg, ds_matrices(d), d.feature_names)
    bounds = res.final_bounds
    assert isinstance(bounds, ScoreBounds)
    assert bounds.lo[0] <= bounds.hi[0]
    assert bounds.hi[0] <= 1.0 and bounds.lo[0] >= -1.0
