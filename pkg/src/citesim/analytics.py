"""Aggregates, distribution fits, and statistical-regularity checks.

Everything here is a pure function of an immutable network or of a
record table, so rerunning on serialized inputs reproduces outputs
bit-exactly. Means skip undefined records. Densities integrate to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .disruption import RecordTable
from .netcore import CitationNetwork

EULER_GAMMA = 0.5772156649015329


class DegenerateSampleError(ValueError):
    """Sample unusable for the requested fit or statistic."""


# ---------------------------------------------------------------------------
# per-period series


@dataclass
class SeriesTable:
    """Per-period means over defined disruption records."""

    period: np.ndarray
    mean_cd: np.ndarray
    mean_cd_nok: np.ndarray
    mean_rk: np.ndarray
    mean_nij: np.ndarray
    n: np.ndarray

    def __len__(self) -> int:
        return int(self.period.size)


def _group_mean(values: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    ok = ~np.isnan(values)
    sums = np.bincount(groups[ok], weights=values[ok], minlength=n_groups)
    cnts = np.bincount(groups[ok], minlength=n_groups)
    with np.errstate(invalid="ignore"):
        return np.where(cnts > 0, sums / np.maximum(cnts, 1), np.nan)


def series(records: RecordTable) -> SeriesTable:
    """Arithmetic means of cd, cd_nok, r_k and N_i+N_j per cohort period."""
    if len(records) == 0:
        e = np.empty(0)
        return SeriesTable(np.empty(0, dtype=np.int64), e, e, e, e, np.empty(0, dtype=np.int64))
    lo = int(records.cohort.min())
    hi = int(records.cohort.max())
    idx = records.cohort.astype(np.int64) - lo
    n_groups = hi - lo + 1
    periods = np.arange(lo, hi + 1, dtype=np.int64)
    counts = np.bincount(idx, minlength=n_groups)
    out = SeriesTable(
        period=periods,
        mean_cd=_group_mean(records.cd, idx, n_groups),
        mean_cd_nok=_group_mean(records.cd_nok, idx, n_groups),
        mean_rk=_group_mean(records.r_k, idx, n_groups),
        mean_nij=_group_mean(records.n_ij.astype(np.float64), idx, n_groups),
        n=counts,
    )
    return out


def ensemble_series(tables: list[SeriesTable]) -> SeriesTable:
    """Mean of per-network period means across an ensemble; n is summed."""
    if not tables:
        raise ValueError("empty ensemble")
    period = tables[0].period
    for t in tables[1:]:
        if not np.array_equal(t.period, period):
            raise ValueError("ensemble members cover different periods")
    stack = lambda attr: np.nanmean(np.vstack([getattr(t, attr) for t in tables]), axis=0)
    with np.errstate(invalid="ignore"):
        return SeriesTable(
            period=period.copy(),
            mean_cd=stack("mean_cd"),
            mean_cd_nok=stack("mean_cd_nok"),
            mean_rk=stack("mean_rk"),
            mean_nij=stack("mean_nij"),
            n=np.sum(np.vstack([t.n for t in tables]), axis=0),
        )


# ---------------------------------------------------------------------------
# distributions over period intervals


@dataclass
class IntervalHistogram:
    start: int
    end: int  # inclusive
    bin_edges: np.ndarray
    density: np.ndarray
    mean: float
    n: int


def _fd_bin_edges(pooled: np.ndarray) -> np.ndarray:
    """Freedman-Diaconis edges on the pooled sample, shared across intervals."""
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        lo -= 0.5
        hi += 0.5
    q75, q25 = np.percentile(pooled, [75, 25])
    iqr = q75 - q25
    width = 2.0 * iqr / pooled.size ** (1.0 / 3.0)
    if width <= 0:
        width = (hi - lo) / 50.0
    nbins = max(1, min(500, int(math.ceil((hi - lo) / width))))
    return np.linspace(lo, hi, nbins + 1)


def cd_distribution(
    records: RecordTable,
    interval: int = 10,
    cohort_range: tuple[int, int] | None = None,
) -> list[IntervalHistogram]:
    """Normalized cd densities over consecutive ``interval``-period blocks.

    The analysis range must be an exact multiple of the interval length;
    bin edges are shared across blocks for comparability.
    """
    if interval < 1:
        raise ValueError("interval must be >= 1")
    if cohort_range is None:
        cohort_range = (int(records.cohort.min()), int(records.cohort.max()))
    lo, hi = cohort_range
    span = hi - lo + 1
    if span % interval != 0:
        raise ValueError(f"interval {interval} does not divide range span {span}")
    sel = (records.cohort >= lo) & (records.cohort <= hi) & records.defined_cd
    pooled = records.cd[sel]
    if pooled.size == 0:
        raise DegenerateSampleError("no defined cd values in range")
    edges = _fd_bin_edges(pooled)
    out: list[IntervalHistogram] = []
    for start in range(lo, hi + 1, interval):
        end = start + interval - 1
        mask = sel & (records.cohort >= start) & (records.cohort <= end)
        vals = records.cd[mask]
        if vals.size:
            density, _ = np.histogram(vals, bins=edges, density=True)
            mean = float(vals.mean())
        else:
            density = np.zeros(edges.size - 1)
            mean = float("nan")
        out.append(
            IntervalHistogram(
                start=start, end=end, bin_edges=edges, density=density,
                mean=mean, n=int(vals.size),
            )
        )
    return out


# ---------------------------------------------------------------------------
# extreme-value and normal fits


@dataclass
class FitResult:
    family: str  # gumbel_max | gumbel_min | normal
    location: float
    scale: float
    ks_stat: float
    n: int
    loglik: float = field(default=float("nan"))


def _ks_distance(sorted_x: np.ndarray, cdf_vals: np.ndarray) -> float:
    n = sorted_x.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - cdf_vals, cdf_vals - (i - 1) / n)))


def _gumbel_max_mle(x: np.ndarray) -> tuple[float, float, float]:
    """MLE (location, scale, loglik) for the max-orientation Gumbel.

    Moment start (scale = s*sqrt(6)/pi, location = mean - gamma*scale),
    then the 1-d profile-likelihood equation for the scale is solved to
    relative tolerance 1e-9.
    """
    from scipy.optimize import brentq

    n = x.size
    mean = float(x.mean())
    s = float(x.std(ddof=1))
    beta0 = s * math.sqrt(6.0) / math.pi

    xmax = float(x.max())

    def profile_eq(beta: float) -> float:
        # beta - mean + sum(x e^{-x/b}) / sum(e^{-x/b}), shifted for stability
        e = np.exp(-(x - xmax) / beta)
        return beta - mean + float((x * e).sum() / e.sum())

    lo, hi = beta0 / 8.0, beta0 * 8.0
    flo, fhi = profile_eq(lo), profile_eq(hi)
    grow = 0
    while flo * fhi > 0 and grow < 60:
        lo /= 2.0
        hi *= 2.0
        flo, fhi = profile_eq(lo), profile_eq(hi)
        grow += 1
    if flo * fhi > 0:
        raise DegenerateSampleError("gumbel scale equation has no bracketed root")
    beta = float(brentq(profile_eq, lo, hi, xtol=1e-300, rtol=1e-9))
    e = np.exp(-(x - xmax) / beta)
    mu = xmax + beta * math.log(float(e.mean()))
    z = (x - mu) / beta
    loglik = float(-n * math.log(beta) - z.sum() - np.exp(-z).sum())
    return mu, beta, loglik


def _gumbel_cdf_max(x: np.ndarray, mu: float, beta: float) -> np.ndarray:
    return np.exp(-np.exp(-(x - mu) / beta))


def fit_extreme_value(samples: np.ndarray) -> FitResult:
    """Best-fit Fisher-Tippett (Gumbel) distribution, orientation selected
    by likelihood; ks_stat is the Kolmogorov-Smirnov distance of the fit."""
    x = np.asarray(samples, dtype=np.float64)
    x = x[~np.isnan(x)]
    if x.size < 30:
        raise DegenerateSampleError(f"need >= 30 samples, got {x.size}")
    if float(x.std(ddof=1)) == 0.0:
        raise DegenerateSampleError("zero-variance sample")
    mu_max, beta_max, ll_max = _gumbel_max_mle(x)
    mu_min_neg, beta_min, ll_min = _gumbel_max_mle(-x)
    xs = np.sort(x)
    if ll_max >= ll_min:
        ks = _ks_distance(xs, _gumbel_cdf_max(xs, mu_max, beta_max))
        return FitResult("gumbel_max", mu_max, beta_max, ks, x.size, ll_max)
    mu = -mu_min_neg
    # min-orientation CDF: 1 - exp(-exp((x - mu)/beta))
    cdf = 1.0 - np.exp(-np.exp((xs - mu) / beta_min))
    ks = _ks_distance(xs, cdf)
    return FitResult("gumbel_min", mu, beta_min, ks, x.size, ll_min)


def fit_normal(samples: np.ndarray) -> FitResult:
    """Gaussian MLE with its KS distance, for model comparison."""
    from scipy.special import ndtr

    x = np.asarray(samples, dtype=np.float64)
    x = x[~np.isnan(x)]
    if x.size < 30:
        raise DegenerateSampleError(f"need >= 30 samples, got {x.size}")
    mu = float(x.mean())
    sigma = float(x.std(ddof=0))
    if sigma == 0.0:
        raise DegenerateSampleError("zero-variance sample")
    xs = np.sort(x)
    ks = _ks_distance(xs, ndtr((xs - mu) / sigma))
    n = x.size
    loglik = float(-0.5 * n * (1.0 + math.log(2.0 * math.pi) + 2.0 * math.log(sigma)))
    return FitResult("normal", mu, sigma, ks, n, loglik)


# ---------------------------------------------------------------------------
# citation-count regularities


class CensoringWindowError(ValueError):
    def __init__(self, cohort: int, tau: int, T: int) -> None:
        super().__init__(f"cohort {cohort} at age {tau} needs period {cohort + tau - 1} > T = {T}")


def citations_at_age(net: CitationNetwork, cohort: int, tau: int) -> np.ndarray:
    """Citations received by each cohort node through age tau.

    Age 1 is the node's own entry period, so age tau means citations
    through the end of period cohort + tau - 1.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    horizon = cohort + tau - 1
    if horizon > net.T:
        raise CensoringWindowError(cohort, tau, net.T)
    lo = net.cohort_start[cohort]
    hi = net.cohort_start[cohort + 1]
    all_counts = net.citations_through(horizon)
    return all_counts[lo:hi]


@dataclass
class ZNormResult:
    """Per-node z-scores with the per-cohort lognormal location/scale."""

    z: np.ndarray  # NaN for nodes in flagged or post-horizon cohorts
    mu: np.ndarray  # indexed by cohort 0..horizon
    sigma: np.ndarray
    flagged: np.ndarray  # cohorts where sigma == 0
    horizon: int


def znorm_citations(net: CitationNetwork, horizon: int | None = None) -> ZNormResult:
    """z = (ln(c+1) - mu_t) / sigma_t with c tallied at the horizon period.

    mu_t and sigma_t are the mean and (population) standard deviation of
    ln(c+1) across the nodes of each cohort t <= horizon.
    """
    if horizon is None:
        horizon = net.T
    if horizon > net.T:
        raise ValueError(f"horizon {horizon} > T = {net.T}")
    counts = net.citations_through(horizon)
    logc = np.log(counts.astype(np.float64) + 1.0)
    z = np.full(net.num_nodes, np.nan)
    mu = np.zeros(horizon + 1)
    sigma = np.zeros(horizon + 1)
    flagged = np.zeros(horizon + 1, dtype=bool)
    for t in range(horizon + 1):
        lo, hi = net.cohort_start[t], net.cohort_start[t + 1]
        if hi == lo:
            flagged[t] = True
            continue
        seg = logc[lo:hi]
        mu[t] = float(seg.mean())
        sigma[t] = float(seg.std(ddof=0))
        if sigma[t] == 0.0:
            flagged[t] = True
            continue
        z[lo:hi] = (seg - mu[t]) / sigma[t]
    return ZNormResult(z=z, mu=mu, sigma=sigma, flagged=flagged, horizon=horizon)


def mean_reference_age(net: CitationNetwork) -> tuple[np.ndarray, np.ndarray]:
    """Per-period mean reference distance t_citing - t_cited over new edges."""
    citing = np.repeat(net.cohort.astype(np.int64), np.diff(net.ref_indptr))
    ages = citing - net.cohort[net.ref_targets]
    periods = np.arange(net.T + 1, dtype=np.int64)
    sums = np.bincount(citing, weights=ages.astype(np.float64), minlength=net.T + 1)
    cnts = np.bincount(citing, minlength=net.T + 1)
    with np.errstate(invalid="ignore"):
        means = np.where(cnts > 0, sums / np.maximum(cnts, 1), np.nan)
    return periods, means


def fraction_below(net: CitationNetwork, c_max: int, tau: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cohort fraction of nodes with at most c_max citations at age tau."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    last = net.T - tau + 1
    cohorts = np.arange(0, last + 1, dtype=np.int64)
    fracs = np.empty(cohorts.size)
    for i, t in enumerate(cohorts):
        counts = citations_at_age(net, int(t), tau)
        fracs[i] = float((counts <= c_max).mean()) if counts.size else float("nan")
    return cohorts, fracs


def lifecycle(net: CitationNetwork, cohort: int) -> np.ndarray:
    """Mean new citations per node at each age tau = 1..T-cohort+1."""
    lo, hi = net.cohort_start[cohort], net.cohort_start[cohort + 1]
    size = hi - lo
    if size == 0:
        raise ValueError(f"cohort {cohort} is empty")
    max_age = net.T - cohort + 1
    # per-edge citing cohorts of edges into this cohort
    indptr, sources = net.citer_indptr, net.citer_sources
    seg = slice(indptr[lo], indptr[hi])
    citing_cohort = net.cohort[sources[seg]].astype(np.int64)
    ages = citing_cohort - cohort + 1  # citing at age tau of the cited cohort
    ages = ages[ages >= 1]
    totals = np.bincount(ages, minlength=max_age + 1)[1 : max_age + 1]
    return totals.astype(np.float64) / size


def citation_share(
    net: CitationNetwork,
    q: float,
    tau_rank: int,
    cohort: int,
    mode: str = "top",
) -> tuple[np.ndarray, np.ndarray]:
    """Citation share trajectory of a percentile group within one cohort.

    Nodes are ranked by citations at age ``tau_rank`` (ties broken by
    node id). The bottom group holds the floor(q*n) lowest-ranked nodes
    and the top group the rest, so the two groups at the same q partition
    the cohort and their shares sum to 1 (a single-node cohort is its own
    top group). Returns (ages, shares) for ages tau_rank..max age; share
    is NaN while the cohort has no citations.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if mode not in ("top", "bottom"):
        raise ValueError("mode must be 'top' or 'bottom'")
    rank_counts = citations_at_age(net, cohort, tau_rank)
    n = rank_counts.size
    if n == 0:
        raise ValueError(f"cohort {cohort} is empty")
    # ascending by (count, id); epsilon guards binary-fraction fuzz in q*n
    order = np.lexsort((np.arange(n), rank_counts))
    k = int(math.floor(q * n + 1e-9))
    group = order[k:] if mode == "top" else order[:k]
    max_age = net.T - cohort + 1
    ages = np.arange(tau_rank, max_age + 1, dtype=np.int64)
    shares = np.empty(ages.size)
    for i, tau in enumerate(ages):
        counts = citations_at_age(net, cohort, int(tau))
        tot = float(counts.sum())
        shares[i] = float(counts[group].sum()) / tot if tot > 0 else float("nan")
    return ages, shares


def citation_trajectories(
    net: CitationNetwork, cohort_lo: int, cohort_hi: int, rank_period: int, top: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cumulative citation curves for the top nodes of a cohort interval.

    Nodes from cohorts [cohort_lo, cohort_hi] are ranked by citations
    through ``rank_period``; returns (node ids, periods, counts matrix).
    """
    lo = int(net.cohort_start[cohort_lo])
    hi = int(net.cohort_start[cohort_hi + 1])
    ranked = net.citations_through(rank_period)[lo:hi]
    ids = np.arange(lo, hi)
    order = np.lexsort((ids, -ranked))
    chosen = ids[order[:top]]
    periods = np.arange(cohort_lo, net.T + 1, dtype=np.int64)
    curves = np.empty((chosen.size, periods.size))
    for j, t in enumerate(periods):
        curves[:, j] = net.citations_through(int(t))[chosen]
    return chosen, periods, curves


def correlate(xs: np.ndarray, ys: np.ndarray) -> float:
    """Pearson correlation; raises on degenerate input."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    if x.size < 3:
        raise DegenerateSampleError("need at least 3 points")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(np.sqrt((xd * xd).sum()))
    sy = float(np.sqrt((yd * yd).sum()))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateSampleError("zero variance input")
    return float((xd * yd).sum() / (sx * sy))
