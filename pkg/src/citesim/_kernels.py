"""Compiled hot loops for network growth and disruption counting.

These kernels mirror the pure-Python reference paths (``sampling``,
``generator.build_reference_list``, ``disruption.extract_subgraph``)
operation for operation: identical random streams must yield identical
draws, which the parity tests assert on small configurations. Keep the
two sides in lockstep when editing either.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U64 = np.uint64
_U53 = 2.0**-53


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, substream):
    s0 = _mix64(seed + U64(0x9E3779B97F4A7C15) * (U64(substream) + U64(1)))
    gamma = _mix64(s0 ^ U64(0x9E3779B97F4A7C15)) | U64(1)
    return s0, gamma


@njit(cache=True, inline="always")
def _next_f53(state, gamma):
    state = state + gamma
    z = _mix64(state)
    return state, (z >> U64(11)) * _U53


@njit(cache=True)
def fenwick_build(w):
    n = w.size
    tree = np.zeros(n + 1, dtype=np.float64)
    for i in range(1, n + 1):
        tree[i] += w[i - 1]
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]
    return tree


@njit(cache=True)
def fenwick_prefix(tree, i):
    s = 0.0
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


@njit(cache=True, inline="always")
def _excl_weight_below(exc_ids, exc_w, m, bound):
    s = 0.0
    for k in range(m):
        if exc_ids[k] < bound:
            s += exc_w[k]
        else:
            break
    return s


@njit(cache=True, inline="always")
def _excl_insert(exc_ids, exc_w, m, v, wv):
    k = m
    while k > 0 and exc_ids[k - 1] > v:
        exc_ids[k] = exc_ids[k - 1]
        exc_w[k] = exc_w[k - 1]
        k -= 1
    exc_ids[k] = v
    exc_w[k] = wv
    return m + 1


@njit(cache=True, inline="always")
def _excl_contains(exc_ids, m, v):
    for k in range(m):
        if exc_ids[k] == v:
            return True
        if exc_ids[k] > v:
            return False
    return False


@njit(cache=True, inline="always")
def _sample_excluding(tree, n, top_step, total, exc_ids, exc_w, m, state, gamma):
    while True:
        state, u = _next_f53(state, gamma)
        tot_exc = _excl_weight_below(exc_ids, exc_w, m, n)
        target = u * (total - tot_exc)
        pos = 0
        step = top_step
        acc = 0.0
        while step > 0:
            nxt = pos + step
            if nxt <= n:
                span = tree[nxt] - (
                    _excl_weight_below(exc_ids, exc_w, m, nxt)
                    - _excl_weight_below(exc_ids, exc_w, m, pos)
                )
                if acc + span <= target:
                    acc += span
                    pos = nxt
            step >>= 1
        if pos >= n:
            pos = n - 1
        if not _excl_contains(exc_ids, m, pos):
            return state, pos


@njit(cache=True)
def _build_one_list(
    seed,
    a,
    tree,
    w,
    n_all,
    top_step,
    total_w,
    ref_indptr,
    ref_targets,
    committed_end,
    r_t,
    lam,
    q_tab,
    p0_tab,
    qr_tab,
    buf_cap,
    out_cited,
    out_mech,
    out_base,
):
    state, gamma = _stream_init(seed, a)
    exc_ids = np.empty(r_t + 1, dtype=np.int64)
    exc_w = np.empty(r_t + 1, dtype=np.float64)
    m = _excl_insert(exc_ids, exc_w, 0, a, w[a])
    # buf_cap bounds the longest committed reference list, which may
    # exceed r_t under capped or shrinking schedules
    el_ids = np.empty(buf_cap, dtype=np.int64)
    el_w = np.empty(buf_cap, dtype=np.float64)
    picks = np.empty(buf_cap, dtype=np.int64)
    idxbuf = np.empty(buf_cap, dtype=np.int64)
    count = 0
    while count < r_t:
        # mechanism (i): one direct draw over all existing nodes
        state, b = _sample_excluding(
            tree, n_all, top_step, total_w, exc_ids, exc_w, m, state, gamma
        )
        out_cited[out_base + count] = b
        out_mech[out_base + count] = 0
        m = _excl_insert(exc_ids, exc_w, m, b, w[b])
        count += 1
        if count >= r_t or lam <= 0.0:
            continue
        # mechanism (ii): binomial batch through b's committed reference list
        if b >= committed_end:
            continue
        rb = np.int64(ref_indptr[b + 1] - ref_indptr[b])
        if rb == 0:
            continue
        if q_tab[rb] >= 1.0:
            x = rb
        else:
            state, u = _next_f53(state, gamma)
            xx = np.int64(0)
            p = p0_tab[rb]
            cdf = p
            while u > cdf and xx < rb:
                xx += 1
                p = p * ((rb - xx + 1) / xx) * qr_tab[rb]
                cdf += p
            x = xx
        if x == 0:
            continue
        ne = 0
        for e in range(ref_indptr[b], ref_indptr[b + 1]):
            tgt = np.int64(ref_targets[e])
            if not _excl_contains(exc_ids, m, tgt):
                el_ids[ne] = tgt
                el_w[ne] = w[tgt]
                ne += 1
        if ne == 0:
            continue
        npick = x if x < ne else ne
        for d in range(npick):
            tot = 0.0
            for k in range(ne):
                tot += el_w[k]
            state, u = _next_f53(state, gamma)
            tgtv = u * tot
            accv = 0.0
            chosen = ne - 1
            for k in range(ne):
                accv += el_w[k]
                if tgtv < accv:
                    chosen = k
                    break
            picks[d] = el_ids[chosen]
            ne -= 1
            el_ids[chosen] = el_ids[ne]
            el_w[chosen] = el_w[ne]
        nkeep = npick
        remaining = r_t - count
        if npick > remaining:
            # keep a uniform subset of the batch, in draw order
            for k in range(npick):
                idxbuf[k] = k
            for k in range(remaining):
                state, u = _next_f53(state, gamma)
                j = k + np.int64(u * (npick - k))
                if j > npick - 1:
                    j = npick - 1
                tmp = idxbuf[k]
                idxbuf[k] = idxbuf[j]
                idxbuf[j] = tmp
            for k in range(1, remaining):
                key = idxbuf[k]
                kk = k
                while kk > 0 and idxbuf[kk - 1] > key:
                    idxbuf[kk] = idxbuf[kk - 1]
                    kk -= 1
                idxbuf[kk] = key
            nkeep = remaining
            for k in range(nkeep):
                picks[k] = picks[idxbuf[k]]
        for k in range(nkeep):
            tv = picks[k]
            out_cited[out_base + count] = tv
            out_mech[out_base + count] = 1
            m = _excl_insert(exc_ids, exc_w, m, tv, w[tv])
            count += 1


@njit(cache=True)
def run_period_serial(
    seed,
    tree,
    w,
    total_w,
    ref_indptr,
    ref_targets,
    n_start,
    n_new,
    r_t,
    lam,
    q_tab,
    p0_tab,
    qr_tab,
    buf_cap,
    out_cited,
    out_mech,
):
    n_all = n_start + n_new
    top_step = 1
    while top_step * 2 <= n_all:
        top_step *= 2
    for ai in range(n_new):
        _build_one_list(
            seed, n_start + ai, tree, w, n_all, top_step, total_w,
            ref_indptr, ref_targets, n_start, r_t, lam,
            q_tab, p0_tab, qr_tab, buf_cap, out_cited, out_mech, ai * r_t,
        )


@njit(cache=True, parallel=True)
def run_period_parallel(
    seed,
    tree,
    w,
    total_w,
    ref_indptr,
    ref_targets,
    n_start,
    n_new,
    r_t,
    lam,
    q_tab,
    p0_tab,
    qr_tab,
    buf_cap,
    out_cited,
    out_mech,
):
    n_all = n_start + n_new
    top_step = 1
    while top_step * 2 <= n_all:
        top_step *= 2
    for ai in prange(n_new):
        _build_one_list(
            seed, n_start + ai, tree, w, n_all, top_step, total_w,
            ref_indptr, ref_targets, n_start, r_t, lam,
            q_tab, p0_tab, qr_tab, buf_cap, out_cited, out_mech, ai * r_t,
        )


@njit(cache=True, inline="always")
def _lower_bound(arr, lo, hi, val):
    while lo < hi:
        mid = (lo + hi) >> 1
        if arr[mid] < val:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def measure_counts(
    ref_indptr,
    ref_targets,
    citer_indptr,
    citer_sources,
    cohort_start,
    cohort,
    focal_lo,
    focal_hi,
    cw,
    include_same_cohort,
    T,
):
    """Windowed (N_i, N_j, N_k) for every focal node in [focal_lo, focal_hi)."""
    nf = focal_hi - focal_lo
    out = np.zeros((nf, 3), dtype=np.int64)
    n_nodes = cohort.size
    mark_a = np.full(n_nodes, -1, dtype=np.int64)
    mark_j = np.full(n_nodes, -1, dtype=np.int64)
    mark_k = np.full(n_nodes, -1, dtype=np.int64)
    for fi in range(nf):
        p = focal_lo + fi
        tau = np.int64(cohort[p])
        lo_cohort = tau if include_same_cohort else tau + 1
        hi_cohort = tau + cw
        if hi_cohort > T:
            hi_cohort = T
        if lo_cohort > T:
            continue
        lo_id = cohort_start[lo_cohort]
        hi_id = cohort_start[hi_cohort + 1]
        s0 = _lower_bound(citer_sources, citer_indptr[p], citer_indptr[p + 1], lo_id)
        s1 = _lower_bound(citer_sources, citer_indptr[p], citer_indptr[p + 1], hi_id)
        n_cites_p = s1 - s0
        for e in range(s0, s1):
            mark_a[citer_sources[e]] = fi
        nj = 0
        nk = 0
        for re in range(ref_indptr[p], ref_indptr[p + 1]):
            u = np.int64(ref_targets[re])
            c0 = _lower_bound(citer_sources, citer_indptr[u], citer_indptr[u + 1], lo_id)
            c1 = _lower_bound(citer_sources, citer_indptr[u], citer_indptr[u + 1], hi_id)
            for ce in range(c0, c1):
                c = np.int64(citer_sources[ce])
                if c == p:
                    continue
                if mark_a[c] == fi:
                    if mark_j[c] != fi:
                        mark_j[c] = fi
                        nj += 1
                else:
                    if mark_k[c] != fi:
                        mark_k[c] = fi
                        nk += 1
        out[fi, 0] = n_cites_p - nj
        out[fi, 1] = nj
        out[fi, 2] = nk
    return out
