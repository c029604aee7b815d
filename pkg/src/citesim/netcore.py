"""Graph core: growth schedules, cohort bookkeeping, citation network storage.

Node ids are dense integers assigned in creation order, so cohorts are
contiguous id ranges and adjacency lives in flat CSR arrays. The network
is append-only while being built and immutable afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ScheduleDomainError(ValueError):
    """Period outside the schedule's valid range."""


class CohortOrderError(ValueError):
    """Cohorts must be appended in consecutive period order."""


class UnknownNodeError(KeyError):
    """Node id not present in the network."""


@dataclass(frozen=True)
class GrowthSchedule:
    """Deterministic cohort-size and reference-count schedules.

    Cohort 0 holds ``n0`` primordial nodes with empty reference lists.
    For t >= 1 the cohort size is floor(n0 * exp(g_n * (t - t_offset)))
    and the per-node reference count floor(r0 * exp(g_r * (t - t_offset))),
    optionally capped at ``cap_value`` for t >= cap_period.

    ``t_offset`` defaults to 1 so that the period-1 cohort repeats the
    initial size; it is exposed for sensitivity checks only.
    """

    n0: int
    g_n: float
    r0: int
    g_r: float
    T: int
    cap_period: int | None = None
    cap_value: int | None = None
    t_offset: int = 1

    def __post_init__(self) -> None:
        if self.n0 < 1:
            raise ValueError("n0 must be >= 1")
        if self.r0 < 0:
            raise ValueError("r0 must be >= 0")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if (self.cap_period is None) != (self.cap_value is None):
            raise ValueError("cap_period and cap_value must be given together")
        if self.cap_period is not None and not 1 <= self.cap_period <= self.T:
            raise ValueError("cap_period must lie in [1, T]")
        if self.cap_value is not None and self.cap_value < 0:
            raise ValueError("cap_value must be >= 0")

    def n_at(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise ScheduleDomainError(f"period {t} outside [1, {self.T}]")
        return math.floor(self.n0 * math.exp(self.g_n * (t - self.t_offset)))

    def r_at(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise ScheduleDomainError(f"period {t} outside [1, {self.T}]")
        if self.cap_period is not None and t >= self.cap_period:
            return int(self.cap_value)  # type: ignore[arg-type]
        return math.floor(self.r0 * math.exp(self.g_r * (t - self.t_offset)))

    def cohort_sizes(self) -> np.ndarray:
        """Sizes indexed by period 0..T; index 0 is the primordial cohort."""
        return np.array([self.n0] + [self.n_at(t) for t in range(1, self.T + 1)], dtype=np.int64)

    def ref_counts(self) -> np.ndarray:
        """Per-node reference counts indexed by period 0..T (0 for cohort 0)."""
        return np.array([0] + [self.r_at(t) for t in range(1, self.T + 1)], dtype=np.int64)

    def total_nodes(self) -> int:
        return int(self.cohort_sizes().sum())

    def total_edges(self) -> int:
        sizes = self.cohort_sizes()
        refs = self.ref_counts()
        return int((sizes * refs).sum())


def schedule_n(sched: GrowthSchedule, t: int) -> int:
    """Number of new publications entering in period t."""
    return sched.n_at(t)


def schedule_r(sched: GrowthSchedule, t: int) -> int:
    """Reference-list length for publications entering in period t."""
    return sched.r_at(t)


class CitationNetwork:
    """Immutable citation graph with per-node cohort index.

    Forward adjacency (reference lists) is stored CSR-style in
    ``ref_indptr`` / ``ref_targets``; the transpose (citers) is built
    lazily. Node ids are contiguous from 0 in cohort order, so cohort t
    occupies ids [cohort_start[t], cohort_start[t+1]).
    """

    def __init__(
        self,
        cohort_sizes: Sequence[int],
        ref_indptr: np.ndarray,
        ref_targets: np.ndarray,
        mechanism: np.ndarray | None = None,
        meta: dict | None = None,
    ) -> None:
        sizes = np.asarray(cohort_sizes, dtype=np.int64)
        self.T = len(sizes) - 1
        self.cohort_start = np.concatenate(([0], np.cumsum(sizes)))
        self.cohort = np.repeat(np.arange(self.T + 1, dtype=np.int32), sizes)
        self.ref_indptr = np.asarray(ref_indptr, dtype=np.int64)
        self.ref_targets = np.asarray(ref_targets, dtype=np.int32)
        self.mechanism = None if mechanism is None else np.asarray(mechanism, dtype=np.uint8)
        self.meta = dict(meta) if meta else {}
        if self.ref_indptr.shape != (self.num_nodes + 1,):
            raise ValueError("ref_indptr length must be num_nodes + 1")
        if self.ref_indptr[-1] != self.ref_targets.size:
            raise ValueError("ref_indptr inconsistent with ref_targets")
        self._citer_indptr: np.ndarray | None = None
        self._citer_sources: np.ndarray | None = None

    # -- basic accessors ---------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return int(self.cohort_start[-1])

    @property
    def num_edges(self) -> int:
        return int(self.ref_targets.size)

    def cohort_of(self, v: int) -> int:
        self._check_node(v)
        return int(self.cohort[v])

    def cohort_size(self, t: int) -> int:
        return int(self.cohort_start[t + 1] - self.cohort_start[t])

    def refs(self, v: int) -> np.ndarray:
        """Reference list of v (view into the CSR array)."""
        self._check_node(v)
        return self.ref_targets[self.ref_indptr[v] : self.ref_indptr[v + 1]]

    def citers(self, v: int) -> np.ndarray:
        """Citing nodes of v, ascending by id (hence by cohort)."""
        self._check_node(v)
        indptr, sources = self._transpose()
        return sources[indptr[v] : indptr[v + 1]]

    def citing_cohorts(self, v: int) -> np.ndarray:
        return self.cohort[self.citers(v)]

    def _check_node(self, v: int) -> None:
        if not 0 <= v < self.num_nodes:
            raise UnknownNodeError(v)

    def _transpose(self) -> tuple[np.ndarray, np.ndarray]:
        if self._citer_indptr is None:
            indeg = np.bincount(self.ref_targets, minlength=self.num_nodes)
            self._citer_indptr = np.concatenate(([0], np.cumsum(indeg)))
            # stable sort by cited id keeps citers in edge (= citing id) order
            order = np.argsort(self.ref_targets, kind="stable")
            citing = np.repeat(
                np.arange(self.num_nodes, dtype=np.int32),
                np.diff(self.ref_indptr),
            )
            self._citer_sources = citing[order]
        return self._citer_indptr, self._citer_sources  # type: ignore[return-value]

    @property
    def citer_indptr(self) -> np.ndarray:
        return self._transpose()[0]

    @property
    def citer_sources(self) -> np.ndarray:
        return self._transpose()[1]

    # -- citation counts ---------------------------------------------------

    def citations_before(self, b: int, t: int) -> int:
        """Citations received by b through the end of period t - 1."""
        self._check_node(b)
        if t < self.cohort[b]:
            raise ValueError(f"period {t} precedes cohort of node {b}")
        cs = self.citers(b)
        bound = self.cohort_start[min(t, self.T + 1)]
        return int(np.searchsorted(cs, bound, side="left"))

    def citations_through(self, t: int) -> np.ndarray:
        """Vector of citations received by every node through period t."""
        if t < 0:
            return np.zeros(self.num_nodes, dtype=np.int64)
        bound = self.cohort_start[min(t + 1, self.T + 1)]
        # edges are stored in citing-id order, so a prefix of ref_targets
        # holds exactly the edges produced through period t
        cited = self.ref_targets[: self.ref_indptr[bound]]
        return np.bincount(cited, minlength=self.num_nodes)

    # -- structural checks -------------------------------------------------

    def validate(self) -> None:
        """Full-scan structural invariants; raises AssertionError on violation."""
        assert np.all(np.diff(self.ref_indptr) >= 0)
        if self.num_edges:
            citing = np.repeat(
                np.arange(self.num_nodes, dtype=np.int64), np.diff(self.ref_indptr)
            )
            assert np.all(self.cohort[self.ref_targets] <= self.cohort[citing]), (
                "edge points forward in time"
            )
            assert np.all(self.ref_targets != citing), "self-reference"
            for v in range(self.num_nodes):
                row = self.refs(v)
                assert len(set(row.tolist())) == row.size, f"duplicate refs at {v}"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CitationNetwork):
            return NotImplemented
        return (
            self.T == other.T
            and np.array_equal(self.cohort_start, other.cohort_start)
            and np.array_equal(self.ref_indptr, other.ref_indptr)
            and np.array_equal(self.ref_targets, other.ref_targets)
        )


def citations_before(net: CitationNetwork, b: int, t: int) -> int:
    """Citations received by b through the end of period t - 1."""
    return net.citations_before(b, t)


class NetworkBuilder:
    """Single-writer accumulator for a growing network."""

    def __init__(self) -> None:
        self._sizes: list[int] = []
        self._refs: list[list[int]] = []

    @property
    def current_period(self) -> int:
        return len(self._sizes) - 1

    @property
    def num_nodes(self) -> int:
        return len(self._refs)

    def add_cohort(self, t: int, size: int) -> range:
        """Append ``size`` nodes with cohort t; returns their id range."""
        if t != self.current_period + 1:
            raise CohortOrderError(
                f"expected period {self.current_period + 1}, got {t}"
            )
        if size < 0:
            raise ValueError("cohort size must be >= 0")
        start = self.num_nodes
        self._sizes.append(size)
        self._refs.extend([] for _ in range(size))
        return range(start, start + size)

    def set_refs(self, v: int, refs: Iterable[int]) -> None:
        refs = list(refs)
        if v >= self.num_nodes:
            raise UnknownNodeError(v)
        self._refs[v] = refs

    def finish(self, mechanism: np.ndarray | None = None, meta: dict | None = None) -> CitationNetwork:
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        for v, row in enumerate(self._refs):
            indptr[v + 1] = indptr[v] + len(row)
        targets = np.empty(indptr[-1], dtype=np.int32)
        for v, row in enumerate(self._refs):
            targets[indptr[v] : indptr[v + 1]] = row
        return CitationNetwork(self._sizes, indptr, targets, mechanism=mechanism, meta=meta)


def network_from_lists(cohort_sizes: Sequence[int], refs: dict[int, Sequence[int]]) -> CitationNetwork:
    """Hand-build a small network; refs maps node id to its reference list."""
    b = NetworkBuilder()
    for t, size in enumerate(cohort_sizes):
        b.add_cohort(t, size)
    for v, row in refs.items():
        b.set_refs(v, row)
    return b.finish()
