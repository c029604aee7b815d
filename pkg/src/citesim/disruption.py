"""Citation-window subgraphs and the disruption-metric family.

For a focal publication p with reference set {r}_p, the windowed citer
universe contains every node whose cohort lies within CW periods after
p's and that cites p or any member of {r}_p. It splits into three
disjoint sets:

  i: cite p only           (disruption)
  j: cite p and >= 1 ref   (consolidation, triadic closure)
  k: cite >= 1 ref, not p  (extraneous citation)

CD = (N_i - N_j) / (N_i + N_j + N_k), CD_nok = (N_i - N_j) / (N_i + N_j)
and R_k = N_k / (N_i + N_j), so CD = CD_nok / (1 + R_k) identically.
Undefined values (zero denominators) are values, not errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .netcore import CitationNetwork


class CensoringError(ValueError):
    """Requested window extends past the final generated period."""


@dataclass(frozen=True)
class FocalSubgraph:
    """The windowed subgraph around one focal node."""

    focal: int
    refs: frozenset[int]
    citers_i: frozenset[int]
    citers_j: frozenset[int]
    citers_k: frozenset[int]
    window: int

    def counts(self) -> tuple[int, int, int]:
        return len(self.citers_i), len(self.citers_j), len(self.citers_k)


@dataclass(frozen=True)
class DisruptionRecord:
    focal: int
    cohort: int
    n_i: int
    n_j: int
    n_k: int
    cd: float | None
    cd_nok: float | None
    r_k: float | None
    window: int

    @property
    def defined(self) -> bool:
        return self.cd is not None


def cd_index(n_i: int, n_j: int, n_k: int) -> float | None:
    """(N_i - N_j)/(N_i + N_j + N_k); None when the denominator is zero."""
    denom = n_i + n_j + n_k
    if denom == 0:
        return None
    return (n_i - n_j) / denom


def cd_nok(n_i: int, n_j: int) -> float | None:
    """(N_i - N_j)/(N_i + N_j); None when the denominator is zero."""
    denom = n_i + n_j
    if denom == 0:
        return None
    return (n_i - n_j) / denom


def rk(n_i: int, n_j: int, n_k: int) -> float | None:
    """Extraneous-citation rate N_k/(N_i + N_j); None when undefined."""
    denom = n_i + n_j
    if denom == 0:
        return None
    return n_k / denom


def extract_subgraph(
    net: CitationNetwork,
    p: int,
    cw: int,
    include_same_cohort: bool = False,
) -> FocalSubgraph:
    """Partition the windowed citer universe of p into the i/j/k sets.

    Citers with cohort difference in [1, cw] count ([0, cw] when
    ``include_same_cohort``). Pure-set reference implementation; use
    :func:`measure_all` for whole-network sweeps.
    """
    tau = net.cohort_of(p)
    if tau + cw > net.T:
        raise CensoringError(
            f"window [{tau + 1}, {tau + cw}] extends past final period {net.T}"
        )
    lo = tau if include_same_cohort else tau + 1
    hi = tau + cw

    def windowed(v: int) -> set[int]:
        cs = net.citers(v)
        lo_id = net.cohort_start[lo]
        hi_id = net.cohort_start[hi + 1]
        a = np.searchsorted(cs, lo_id, side="left")
        b = np.searchsorted(cs, hi_id, side="left")
        return set(int(c) for c in cs[a:b])

    cites_p = windowed(p)
    refs = frozenset(int(r) for r in net.refs(p))
    cites_refs: set[int] = set()
    for u in refs:
        cites_refs |= windowed(u)
    cites_refs.discard(p)
    set_j = cites_p & cites_refs
    set_i = cites_p - set_j
    set_k = cites_refs - cites_p
    return FocalSubgraph(
        focal=p,
        refs=refs,
        citers_i=frozenset(set_i),
        citers_j=frozenset(set_j),
        citers_k=frozenset(set_k),
        window=cw,
    )


class RecordTable:
    """Columnar container of disruption records for one measurement run."""

    def __init__(
        self,
        focal: np.ndarray,
        cohort: np.ndarray,
        n_i: np.ndarray,
        n_j: np.ndarray,
        n_k: np.ndarray,
        window: int,
    ) -> None:
        self.focal = np.asarray(focal, dtype=np.int64)
        self.cohort = np.asarray(cohort, dtype=np.int32)
        self.n_i = np.asarray(n_i, dtype=np.int64)
        self.n_j = np.asarray(n_j, dtype=np.int64)
        self.n_k = np.asarray(n_k, dtype=np.int64)
        self.window = window
        nij = self.n_i + self.n_j
        nijk = nij + self.n_k
        with np.errstate(divide="ignore", invalid="ignore"):
            self.cd = np.where(nijk > 0, (self.n_i - self.n_j) / np.maximum(nijk, 1), np.nan)
            self.cd_nok = np.where(nij > 0, (self.n_i - self.n_j) / np.maximum(nij, 1), np.nan)
            self.r_k = np.where(nij > 0, self.n_k / np.maximum(nij, 1), np.nan)
        self.n_ij = nij

    @property
    def defined_cd(self) -> np.ndarray:
        return ~np.isnan(self.cd)

    @property
    def defined_nok(self) -> np.ndarray:
        return ~np.isnan(self.cd_nok)

    def __len__(self) -> int:
        return int(self.focal.size)

    def __iter__(self) -> Iterator[DisruptionRecord]:
        for idx in range(len(self)):
            yield self.record(idx)

    def record(self, idx: int) -> DisruptionRecord:
        def opt(x: float) -> float | None:
            return None if math.isnan(x) else float(x)

        return DisruptionRecord(
            focal=int(self.focal[idx]),
            cohort=int(self.cohort[idx]),
            n_i=int(self.n_i[idx]),
            n_j=int(self.n_j[idx]),
            n_k=int(self.n_k[idx]),
            cd=opt(self.cd[idx]),
            cd_nok=opt(self.cd_nok[idx]),
            r_k=opt(self.r_k[idx]),
            window=self.window,
        )

    def to_csv(self, path) -> None:
        from .netio import write_records_csv

        write_records_csv(self, path)

    @staticmethod
    def concat(tables: list["RecordTable"]) -> "RecordTable":
        if not tables:
            raise ValueError("nothing to concatenate")
        w = tables[0].window
        if any(t.window != w for t in tables):
            raise ValueError("mixed citation windows")
        return RecordTable(
            np.concatenate([t.focal for t in tables]),
            np.concatenate([t.cohort for t in tables]),
            np.concatenate([t.n_i for t in tables]),
            np.concatenate([t.n_j for t in tables]),
            np.concatenate([t.n_k for t in tables]),
            w,
        )


def measure_all(
    net: CitationNetwork,
    cw: int,
    cohort_range: tuple[int, int] | None = None,
    include_same_cohort: bool = False,
    engine: str = "kernel",
) -> RecordTable:
    """One disruption record per focal node in the cohort range.

    The range defaults to [1, T - cw] (primordial nodes and cohorts whose
    window would be right-censored are excluded). Deterministic; the
    kernel and python engines agree exactly.
    """
    if cw < 1:
        raise ValueError("cw must be >= 1")
    max_cohort = net.T - cw
    if max_cohort < 1:
        raise CensoringError(f"cw = {cw} leaves no measurable cohort (T = {net.T})")
    if cohort_range is None:
        cohort_range = (1, max_cohort)
    lo_c, hi_c = cohort_range
    if lo_c > hi_c:
        focal = np.empty(0, dtype=np.int64)
        empty = np.empty(0, dtype=np.int64)
        return RecordTable(focal, empty, empty, empty, empty, cw)
    if lo_c < 1 or hi_c > max_cohort:
        raise CensoringError(
            f"cohort range [{lo_c}, {hi_c}] outside censoring-safe [1, {max_cohort}]"
        )
    focal_lo = int(net.cohort_start[lo_c])
    focal_hi = int(net.cohort_start[hi_c + 1])
    focal = np.arange(focal_lo, focal_hi, dtype=np.int64)

    if engine == "kernel":
        from . import _kernels

        counts = _kernels.measure_counts(
            net.ref_indptr,
            net.ref_targets,
            net.citer_indptr,
            np.ascontiguousarray(net.citer_sources),
            net.cohort_start,
            net.cohort,
            focal_lo,
            focal_hi,
            cw,
            include_same_cohort,
            net.T,
        )
        n_i, n_j, n_k = counts[:, 0], counts[:, 1], counts[:, 2]
    elif engine == "python":
        n_i = np.empty(focal.size, dtype=np.int64)
        n_j = np.empty(focal.size, dtype=np.int64)
        n_k = np.empty(focal.size, dtype=np.int64)
        for idx, p in enumerate(focal):
            sub = extract_subgraph(net, int(p), cw, include_same_cohort)
            n_i[idx], n_j[idx], n_k[idx] = sub.counts()
    else:
        raise ValueError(f"unknown engine {engine!r}")

    return RecordTable(focal, net.cohort[focal], n_i, n_j, n_k, cw)
