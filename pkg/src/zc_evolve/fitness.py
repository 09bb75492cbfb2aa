"""Rank-correlation fitness: Kendall's tau-b and the normalized multi-problem score.

A candidate metric gets one tau per problem; the search-time score sums,
over problems, each tau min-max normalized against the lowest and highest
tau seen so far for that problem.  The score therefore lives in [0, N] for
N problems, reaching N only for a candidate that is the best seen
everywhere at evaluation time.

The inversion-counting kernel inside `kendall_tau` is compiled; set
ZC_EVOLVE_PURE_PYTHON=1 before import to force the NumPy fallback.
"""

from __future__ import annotations

import math
import os
from typing import Sequence

import numpy as np

from .expr import Node, evaluate_batch

if os.environ.get("ZC_EVOLVE_PURE_PYTHON"):
    from ._inversions_py import count_inversions

    KENDALL_BACKEND = "python"
else:
    try:
        from ._inversions import count_inversions  # type: ignore[no-redef]

        KENDALL_BACKEND = "compiled"
    except ImportError:  # extension not built
        from ._inversions_py import count_inversions  # type: ignore[no-redef]

        KENDALL_BACKEND = "python"

WORST_TAU = -1.0


def _tie_pair_count(change_points: np.ndarray, n: int) -> int:
    """Sum of m*(m-1)/2 over runs, given the indices where a sorted array changes."""
    bounds = np.concatenate(([0], change_points + 1, [n]))
    runs = np.diff(bounds)
    return int((runs * (runs - 1) // 2).sum())


def kendall_tau(x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray) -> float:
    """Tie-adjusted Kendall rank correlation (tau-b) in O(n log n).

    Returns 0.0 when either vector is constant (the tie-corrected
    denominator vanishes; a constant ranking carries no order information).
    """
    xv = np.ascontiguousarray(x, dtype=np.float64)
    yv = np.ascontiguousarray(y, dtype=np.float64)
    if xv.ndim != 1 or yv.ndim != 1:
        raise ValueError("kendall_tau expects 1-D vectors")
    n = xv.size
    if yv.size != n:
        raise ValueError(f"length mismatch: {n} vs {yv.size}")
    if n < 2:
        raise ValueError("kendall_tau needs at least 2 observations")
    if not (np.isfinite(xv).all() and np.isfinite(yv).all()):
        raise ValueError("kendall_tau requires finite inputs")

    perm = np.lexsort((yv, xv))
    xs = xv[perm]
    ys = yv[perm]

    x_change = np.flatnonzero(xs[1:] != xs[:-1])
    xy_change = np.flatnonzero((xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1]))
    y_sorted = np.sort(yv)
    y_change = np.flatnonzero(y_sorted[1:] != y_sorted[:-1])

    tot = n * (n - 1) // 2
    xtie = _tie_pair_count(x_change, n)
    ytie = _tie_pair_count(y_change, n)
    xytie = _tie_pair_count(xy_change, n)
    if tot == xtie or tot == ytie:
        return 0.0

    dis = count_inversions(ys)
    num = tot - xtie - ytie + xytie - 2 * dis
    tau = num / math.sqrt((tot - xtie) * (tot - ytie))
    return min(1.0, max(-1.0, tau))


def raw_tau_vector(tree: Node, problems: Sequence) -> np.ndarray:
    """Per-problem tau of the tree's scores against the targets, in problem order.

    `problems` is a sequence of objects with `.X` (n, d) and `.y` (n,)
    attributes (see `dataset.ProblemMatrix`).  A problem where any proxy
    score comes back non-finite gets the worst value -1.0, which selects
    strongly against numerically unstable expressions.
    """
    taus = np.empty(len(problems), dtype=np.float64)
    for i, pm in enumerate(problems):
        scores = evaluate_batch(tree, pm.X)
        if not np.isfinite(scores).all():
            taus[i] = WORST_TAU
        else:
            taus[i] = kendall_tau(scores, pm.y)
    return taus


class ScoreBounds:
    """Running per-problem (lowest, highest) tau values seen so far.

    Bounds start empty and only widen; `update` returns a new instance so a
    single coordinator can fold evaluation results while workers stay
    read-only.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo: np.ndarray | None = None, hi: np.ndarray | None = None):
        if (lo is None) != (hi is None):
            raise ValueError("lo and hi must be given together")
        if lo is not None:
            lo = np.asarray(lo, dtype=np.float64)
            hi = np.asarray(hi, dtype=np.float64)
            if lo.shape != hi.shape or lo.ndim != 1:
                raise ValueError("lo and hi must be 1-D arrays of equal length")
            if (lo > hi).any():
                raise ValueError("lower bounds exceed upper bounds")
        self.lo = lo
        self.hi = hi

    @property
    def populated(self) -> bool:
        return self.lo is not None

    def __len__(self) -> int:
        return 0 if self.lo is None else self.lo.size

    def update(self, tau: np.ndarray) -> "ScoreBounds":
        """Widen the bounds with one tau vector."""
        return self.update_all(np.asarray(tau, dtype=np.float64)[None, :])

    def update_all(self, taus: np.ndarray) -> "ScoreBounds":
        """Widen the bounds with a (k, n_problems) stack of tau vectors."""
        taus = np.asarray(taus, dtype=np.float64)
        if taus.ndim != 2 or taus.shape[0] == 0:
            raise ValueError("expected a non-empty 2-D stack of tau vectors")
        lo = taus.min(axis=0)
        hi = taus.max(axis=0)
        if self.lo is not None:
            if taus.shape[1] != self.lo.size:
                raise ValueError(f"expected {self.lo.size} problems, got {taus.shape[1]}")
            lo = np.minimum(self.lo, lo)
            hi = np.maximum(self.hi, hi)
        return ScoreBounds(lo, hi)

    def score(self, tau: np.ndarray) -> float:
        """Sum of per-problem min-max normalized tau values.

        A problem whose bounds are degenerate (single tau value seen so
        far) contributes the midpoint 0.5.
        """
        if self.lo is None or self.hi is None:
            raise ValueError("bounds are empty; update them before scoring")
        tau = np.asarray(tau, dtype=np.float64)
        if tau.shape != self.lo.shape:
            raise ValueError(f"expected {self.lo.size} tau values, got {tau.shape}")
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        terms = np.where(span > 0, (tau - self.lo) / safe, 0.5)
        return float(terms.sum())

    def __repr__(self) -> str:
        if self.lo is None:
            return "ScoreBounds(empty)"
        pairs = ", ".join(f"({lo:.4g}, {hi:.4g})" for lo, hi in zip(self.lo, self.hi))
        return f"ScoreBounds({pairs})"
