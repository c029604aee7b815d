"""Monte-Carlo growth of citation networks.

Each period t adds n(t) publications; each new publication builds its
reference list by alternating two mechanisms until exactly r(t) distinct
references are chosen:

  (i)  direct citation of one existing publication b, drawn with
       probability proportional to (c_x + c_{b,t-1}) * n(t_b)**alpha,
       where c_{b,t-1} counts citations through the end of the previous
       period (weights are frozen per period);
  (ii) a redirect batch: x ~ Binomial(r_b, lambda/r_b) members of b's
       reference list, drawn without replacement using the same frozen
       weights. lambda = beta/(1-beta) sets the expected batch size, so
       beta is the expected fraction of redirect edges.

Same-cohort citation is allowed (new nodes are instantiated before any
linking, with zero observed citations); self-citation is not. A redirect
through a node whose own list is not yet committed (a cohort-mate or a
primordial node) contributes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .netcore import CitationNetwork, GrowthSchedule
from .rng import RngStream
from .sampling import AttractivenessIndex, ExclusionOverlay, ExhaustionError

__all__ = [
    "GeneratorConfig",
    "BETA_MODES",
    "lambda_of_beta",
    "beta_at",
    "attractiveness",
    "sample_direct",
    "sample_redirect_count",
    "sample_redirect_targets",
    "build_reference_list",
    "generate",
    "ExhaustionError",
]


def _beta_zero(t: int) -> float:
    return 0.0


def _beta_linear400(t: int) -> float:
    return t / 400.0


BETA_MODES: dict[str, Callable[[int], float]] = {
    "zero": _beta_zero,
    "linear400": _beta_linear400,
}


def lambda_of_beta(beta: float) -> float:
    """Expected redirects per direct citation: beta / (1 - beta)."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    return beta / (1.0 - beta)


@dataclass(frozen=True)
class GeneratorConfig:
    """Full parameterization of one synthetic network run."""

    schedule: GrowthSchedule
    c_cross: float = 6.0
    alpha: float = 5.0
    beta_mode: str = "zero"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.c_cross <= 0:
            raise ValueError("c_cross must be > 0 (uncited nodes need positive weight)")
        if self.beta_mode not in BETA_MODES:
            raise ValueError(f"unknown beta_mode {self.beta_mode!r}")
        beta_fn = BETA_MODES[self.beta_mode]
        for t in range(0, self.schedule.T + 1):
            b = beta_fn(t)
            if not 0.0 <= b < 1.0:
                raise ValueError(
                    f"beta({t}) = {b} outside [0, 1); shorten T or change beta_mode"
                )

    def beta(self, t: int) -> float:
        return BETA_MODES[self.beta_mode](t)


def beta_at(config: GeneratorConfig, t: int) -> float:
    """Redirect fraction for period t under the configured schedule."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return config.beta(t)


def attractiveness(net: CitationNetwork, b: int, t: int, config: GeneratorConfig) -> float:
    """Sampling weight of node b at period t: (c_x + c_{b,t-1}) * n(t_b)**alpha."""
    c = net.citations_before(b, t)
    n_tb = net.cohort_size(net.cohort_of(b))
    return (config.c_cross + c) * float(n_tb) ** config.alpha


def sample_direct(index: AttractivenessIndex, exclude: ExclusionOverlay, rng: RngStream) -> int:
    """Mechanism (i): one weighted draw over non-excluded nodes."""
    return index.sample(exclude, rng)


def sample_redirect_count(r_b: int, lam: float, rng: RngStream) -> int:
    """Mechanism (ii) batch size: Binomial(r_b, q) with q = min(lam/r_b, 1).

    Returns 0 without consuming randomness when r_b == 0 or lam == 0, and
    r_b without consuming randomness when lam >= r_b (q clamped to 1).
    """
    if r_b < 0 or lam < 0:
        raise ValueError("r_b and lam must be non-negative")
    if r_b == 0 or lam == 0.0:
        return 0
    q = min(lam / r_b, 1.0)
    if q >= 1.0:
        return r_b
    p0 = (1.0 - q) ** r_b
    qr = q / (1.0 - q)
    u = rng.uniform()
    x = 0
    p = p0
    cdf = p
    while u > cdf and x < r_b:
        x += 1
        p = p * ((r_b - x + 1) / x) * qr
        cdf += p
    return x


def sample_redirect_targets(
    index: AttractivenessIndex,
    refs_b: Sequence[int],
    x: int,
    exclude: ExclusionOverlay,
    rng: RngStream,
) -> list[int]:
    """Draw up to x distinct members of refs_b, weighted, without replacement.

    Excluded ids are never returned; if fewer than x members are eligible
    the whole eligible pool is returned. Result preserves draw order.
    """
    el_ids: list[int] = []
    el_w: list[float] = []
    for tgt in refs_b:
        if tgt not in exclude:
            el_ids.append(int(tgt))
            el_w.append(index.weight(int(tgt)))
    ne = len(el_ids)
    npick = min(x, ne)
    picks: list[int] = []
    for _ in range(npick):
        tot = 0.0
        for k in range(ne):
            tot += el_w[k]
        u = rng.uniform()
        tgtv = u * tot
        accv = 0.0
        chosen = ne - 1
        for k in range(ne):
            accv += el_w[k]
            if tgtv < accv:
                chosen = k
                break
        picks.append(el_ids[chosen])
        ne -= 1
        el_ids[chosen] = el_ids[ne]
        el_w[chosen] = el_w[ne]
    return picks


def _truncate_uniform(picks: list[int], keep: int, rng: RngStream) -> list[int]:
    """Uniform subset of size ``keep``, preserving draw order."""
    n = len(picks)
    idx = list(range(n))
    for k in range(keep):
        j = k + rng.randbelow(n - k)
        idx[k], idx[j] = idx[j], idx[k]
    head = sorted(idx[:keep])
    return [picks[i] for i in head]


def build_reference_list(
    index: AttractivenessIndex,
    ref_lookup: Callable[[int], Sequence[int]],
    a: int,
    r_t: int,
    lam: float,
    rng: RngStream,
) -> tuple[list[int], list[int]]:
    """Build one reference list of exactly r_t distinct targets for node a.

    ``ref_lookup(b)`` must return the committed reference list of b (empty
    for primordial and not-yet-committed nodes). Returns (targets, mechs)
    with mech 0 for direct draws and 1 for redirected ones.
    """
    exclude = index.new_overlay(r_t + 1)
    exclude.insert(a, index.weight(a))
    targets: list[int] = []
    mechs: list[int] = []
    while len(targets) < r_t:
        b = sample_direct(index, exclude, rng)
        targets.append(b)
        mechs.append(0)
        exclude.insert(b, index.weight(b))
        if len(targets) >= r_t or lam <= 0.0:
            continue
        refs_b = ref_lookup(b)
        r_b = len(refs_b)
        if r_b == 0:
            continue
        x = sample_redirect_count(r_b, lam, rng)
        if x == 0:
            continue
        picks = sample_redirect_targets(index, refs_b, x, exclude, rng)
        if not picks:
            continue
        remaining = r_t - len(targets)
        if len(picks) > remaining:
            picks = _truncate_uniform(picks, remaining, rng)
        for tv in picks:
            targets.append(tv)
            mechs.append(1)
            exclude.insert(tv, index.weight(tv))
    return targets, mechs


def _period_weights(
    counts: np.ndarray, cohort: np.ndarray, npow: np.ndarray, c_cross: float, node_end: int
) -> np.ndarray:
    w = (c_cross + counts[:node_end].astype(np.float64)) * npow[cohort[:node_end]]
    w /= w.max()
    return w


def _q_p0_qr(lam: float, r_b: int) -> tuple[float, float, float]:
    # one shared code path so kernel tables match sample_redirect_count exactly
    q = min(lam / r_b, 1.0)
    if q >= 1.0:
        return 1.0, 0.0, 0.0
    return q, (1.0 - q) ** r_b, q / (1.0 - q)


def generate(
    config: GeneratorConfig,
    engine: str = "kernel",
    threads: int = 1,
    keep_mechanism: bool = True,
) -> CitationNetwork:
    """Grow a full network under ``config``. Deterministic for fixed seed.

    engine "kernel" uses the compiled hot loop; "python" runs the pure
    reference implementation (identical draws, far slower; intended for
    small configurations and verification).
    """
    if engine not in ("kernel", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    sched = config.schedule
    sizes = sched.cohort_sizes()
    rcounts = sched.ref_counts()
    T = sched.T
    n_nodes = int(sizes.sum())
    n_edges = int((sizes * rcounts).sum())
    cohort = np.repeat(np.arange(T + 1, dtype=np.int32), sizes)
    npow = sizes.astype(np.float64) ** config.alpha
    ref_indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    ref_targets = np.empty(n_edges, dtype=np.int32)
    mech = np.empty(n_edges, dtype=np.uint8)
    counts = np.zeros(n_nodes, dtype=np.int64)
    seed = config.seed

    if engine == "kernel":
        from . import _kernels

        if threads > 1:
            import numba

            threads = min(threads, numba.config.NUMBA_NUM_THREADS)
            numba.set_num_threads(threads)
        run = _kernels.run_period_parallel if threads > 1 else _kernels.run_period_serial

    pos = 0
    node_end = int(sizes[0])
    for t in range(1, T + 1):
        n_new = int(sizes[t])
        r_t = int(rcounts[t])
        n_start = node_end
        node_end += n_new
        if n_new == 0:
            continue
        if r_t > 0 and n_start + n_new - 1 < r_t:
            raise ExhaustionError(
                f"period {t}: pool of {n_start + n_new - 1} candidates "
                f"cannot supply r(t) = {r_t} distinct references"
            )
        w = _period_weights(counts, cohort, npow, config.c_cross, node_end)
        lam = lambda_of_beta(beta_at(config, t))
        out_cited = ref_targets[pos : pos + n_new * r_t]
        out_mech = mech[pos : pos + n_new * r_t]

        if r_t > 0 and engine == "kernel":
            tree = _kernels.fenwick_build(w)
            total_w = _kernels.fenwick_prefix(tree, node_end)
            rmax = int(rcounts[1:t].max()) if t > 1 else 0
            q_tab = np.zeros(rmax + 1, dtype=np.float64)
            p0_tab = np.ones(rmax + 1, dtype=np.float64)
            qr_tab = np.zeros(rmax + 1, dtype=np.float64)
            for rb in range(1, rmax + 1):
                q_tab[rb], p0_tab[rb], qr_tab[rb] = _q_p0_qr(lam, rb)
            buf_cap = max(rmax, r_t) + 1
            run(
                np.uint64(seed), tree, w, total_w, ref_indptr, ref_targets,
                n_start, n_new, r_t, lam, q_tab, p0_tab, qr_tab, buf_cap,
                out_cited, out_mech,
            )
        elif r_t > 0:
            index = AttractivenessIndex(w, frozen_at=t)

            def ref_lookup(b: int, _start=n_start) -> np.ndarray:
                if b >= _start:  # not committed yet: primordial-like, empty
                    return _EMPTY_REFS
                return ref_targets[ref_indptr[b] : ref_indptr[b + 1]]

            for ai in range(n_new):
                a = n_start + ai
                rng = RngStream(seed, a)
                tlist, mlist = build_reference_list(index, ref_lookup, a, r_t, lam, rng)
                out_cited[ai * r_t : (ai + 1) * r_t] = tlist
                out_mech[ai * r_t : (ai + 1) * r_t] = mlist

        for i in range(n_new):
            ref_indptr[n_start + i + 1] = pos + (i + 1) * r_t
        pos += n_new * r_t
        if r_t > 0:
            counts[:node_end] += np.bincount(out_cited, minlength=node_end)
        ref_indptr[node_end:] = pos

    meta = {
        "seed": config.seed,
        "c_cross": config.c_cross,
        "alpha": config.alpha,
        "beta_mode": config.beta_mode,
        "n0": sched.n0,
        "g_n": sched.g_n,
        "r0": sched.r0,
        "g_r": sched.g_r,
        "T": sched.T,
        "T_star": sched.cap_period,
        "r_cap": sched.cap_value,
    }
    return CitationNetwork(
        sizes, ref_indptr, ref_targets,
        mechanism=mech if keep_mechanism else None,
        meta=meta,
    )


_EMPTY_REFS = np.empty(0, dtype=np.int32)
