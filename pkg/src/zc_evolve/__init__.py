"""Evolving training-free performance predictors over zero-cost metric features.

Expression trees combining precomputed metric columns are searched with
genetic programming; fitness is the sum of per-problem Kendall tau values,
each min-max normalized against the range seen so far.  An Aging-Evolution
consumer can then use any evolved or built-in formula as a training-free
search objective over a tabulated space.
"""

from .dataset import (
    BenchmarkDataset,
    DatasetError,
    DatasetView,
    Problem,
    ProblemMatrix,
    full_view,
    load_manifest,
    split_train_test,
    write_manifest,
)
from .expr import (
    ExprError,
    Leaf,
    Node,
    Op,
    ParseError,
    TreeGenConfig,
    evaluate,
    evaluate_batch,
    parse,
    print_canonical,
    print_infix,
    random_tree,
)
from .fitness import KENDALL_BACKEND, ScoreBounds, kendall_tau, raw_tau_vector
from .gp import GpConfig, Individual, SearchResult, evolve
from .nas_search import AgingParams, ToySearchSpace, aging_evolution, exhaustive_argmax, load_space
from .zoo import NamedProxy, builtin_proxy, evaluate_report, feature_frequency, substitute_feature

__version__ = "0.1.0"

__all__ = [
    "AgingParams",
    "BenchmarkDataset",
    "DatasetError",
    "DatasetView",
    "ExprError",
    "GpConfig",
    "Individual",
    "KENDALL_BACKEND",
    "Leaf",
    "NamedProxy",
    "Node",
    "Op",
    "ParseError",
    "Problem",
    "ProblemMatrix",
    "ScoreBounds",
    "SearchResult",
    "ToySearchSpace",
    "TreeGenConfig",
    "aging_evolution",
    "builtin_proxy",
    "evaluate",
    "evaluate_batch",
    "evaluate_report",
    "evolve",
    "exhaustive_argmax",
    "feature_frequency",
    "full_view",
    "kendall_tau",
    "load_manifest",
    "load_space",
    "parse",
    "print_canonical",
    "print_infix",
    "random_tree",
    "raw_tau_vector",
    "split_train_test",
    "substitute_feature",
    "write_manifest",
]
