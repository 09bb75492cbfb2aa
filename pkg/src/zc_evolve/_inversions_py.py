"""Pure-NumPy inversion counting, used when the compiled kernel is unavailable.

Bottom-up merge over power-of-two blocks; each level counts cross-block
inversions from a stable argsort, so the whole thing stays vectorized.
Same contract as the compiled version: pairs (i < j) with a[i] > a[j],
ties contribute nothing.
"""

from __future__ import annotations

import numpy as np


def count_inversions(values) -> int:
    """Number of strictly decreasing pairs in `values` (1-D array of floats)."""
    a = np.asarray(values, dtype=np.float64)
    n = a.size
    if n < 2:
        return 0
    padded = 1 << (n - 1).bit_length()
    buf = np.full(padded, np.inf)
    buf[:n] = a
    total = 0
    width = 1
    while width < padded:
        rows = buf.reshape(-1, 2 * width)
        order = rows.argsort(axis=1, kind="stable")
        from_left = order < width
        # at a right-block position, the prefix count of left-block elements
        # equals the number of left elements <= it (stable sort breaks ties
        # left-first), so width - prefix counts the strict inversions
        prefix = np.cumsum(from_left, axis=1)
        total += int((width - prefix)[~from_left].sum())
        buf = np.take_along_axis(rows, order, axis=1).reshape(-1)
        width *= 2
    return total
