"""Weighted sampling over frozen per-period attractiveness weights.

A Fenwick (binary indexed) tree gives O(log N) cumulative sums and a
binary-lifting descent gives O(log N) weighted draws. Exclusions (the
citing node itself plus its already-chosen references) are handled by a
small per-draw overlay instead of mutating the shared tree, so the
frozen snapshot stays read-only and draws replay bit-exactly.

The arithmetic here mirrors the compiled kernel in ``_kernels`` operation
for operation; both paths must produce identical draws for identical
random streams.
"""

from __future__ import annotations

import numpy as np

from .rng import RngStream


class ExhaustionError(RuntimeError):
    """No candidate left to sample (entire weight excluded)."""


def fenwick_build(weights: np.ndarray) -> np.ndarray:
    """Fenwick array (1-indexed) over the given non-negative weights."""
    n = weights.size
    tree = np.zeros(n + 1, dtype=np.float64)
    for i in range(1, n + 1):
        tree[i] += weights[i - 1]
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]
    return tree


def fenwick_prefix(tree: np.ndarray, i: int) -> float:
    """Sum of weights for ids < i (0-based exclusive prefix)."""
    s = 0.0
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


class ExclusionOverlay:
    """Sorted (id, weight) side table; linear ops over at most r(t)+1 entries."""

    __slots__ = ("ids", "ws", "n")

    def __init__(self, capacity: int) -> None:
        self.ids = np.empty(capacity, dtype=np.int64)
        self.ws = np.empty(capacity, dtype=np.float64)
        self.n = 0

    def insert(self, v: int, w: float) -> None:
        k = self.n
        ids, ws = self.ids, self.ws
        while k > 0 and ids[k - 1] > v:
            ids[k] = ids[k - 1]
            ws[k] = ws[k - 1]
            k -= 1
        ids[k] = v
        ws[k] = w
        self.n += 1

    def __contains__(self, v: int) -> bool:
        ids = self.ids
        for k in range(self.n):
            if ids[k] == v:
                return True
            if ids[k] > v:
                return False
        return False

    def __len__(self) -> int:
        return self.n

    def members(self) -> list[int]:
        return self.ids[: self.n].tolist()

    def weight_below(self, bound: int) -> float:
        """Total excluded weight for ids < bound."""
        s = 0.0
        ids, ws = self.ids, self.ws
        for k in range(self.n):
            if ids[k] < bound:
                s += ws[k]
            else:
                break
        return s


class AttractivenessIndex:
    """Frozen weighted-sampling structure over the nodes existing at period t.

    Weights reflect citation counts through the end of period t-1 only;
    the structure never changes within a period.
    """

    def __init__(self, weights: np.ndarray, frozen_at: int) -> None:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if w.size == 0:
            raise ValueError("empty weight vector")
        if not np.all(w > 0):
            raise ValueError("all sampling weights must be strictly positive")
        self.weights = w
        self.frozen_at = frozen_at
        self.tree = fenwick_build(w)
        self.total = fenwick_prefix(self.tree, w.size)
        top = 1
        while top * 2 <= w.size:
            top *= 2
        self.top_step = top

    def __len__(self) -> int:
        return self.weights.size

    def weight(self, b: int) -> float:
        return float(self.weights[b])

    def new_overlay(self, capacity: int) -> ExclusionOverlay:
        return ExclusionOverlay(capacity)

    def sample(self, exclude: ExclusionOverlay, rng: RngStream) -> int:
        """One weighted draw over non-excluded ids.

        Probability of id b is w_b over the non-excluded total. Raises
        :class:`ExhaustionError` if everything is excluded.
        """
        n = self.weights.size
        if len(exclude) >= n:
            raise ExhaustionError("candidate pool empty")
        tree = self.tree
        while True:
            u = rng.uniform()
            tot_exc = exclude.weight_below(n)
            target = u * (self.total - tot_exc)
            pos = 0
            step = self.top_step
            acc = 0.0
            while step > 0:
                nxt = pos + step
                if nxt <= n:
                    span = tree[nxt] - (
                        exclude.weight_below(nxt) - exclude.weight_below(pos)
                    )
                    if acc + span <= target:
                        acc += span
                        pos = nxt
                step >>= 1
            if pos >= n:
                pos = n - 1
            # float rounding can land on an excluded id; redraw in that case
            if pos not in exclude:
                return pos
