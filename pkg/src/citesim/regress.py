"""OLS with period fixed effects and marginal-effect evaluation.

The design matrix is intercept + named covariates + one dummy per period
(one period dropped as baseline). Estimation uses a numerically stable
orthogonal decomposition; standard errors are conventional (non-robust).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class CollinearityError(ValueError):
    """Design matrix is rank deficient; names the offending columns."""

    def __init__(self, columns: list[str]) -> None:
        self.columns = columns
        super().__init__(f"collinear design columns: {', '.join(columns)}")


@dataclass
class ObservationTable:
    """Rows of (y, period label, named covariates); no missing values."""

    y: np.ndarray
    period: np.ndarray
    covariates: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        self.y = np.asarray(self.y, dtype=np.float64)
        self.period = np.asarray(self.period)
        n = self.y.size
        if self.period.size != n:
            raise ValueError("period column length mismatch")
        if np.any(np.isnan(self.y)):
            raise ValueError("missing values in y")
        names = list(self.covariates)
        if len(set(names)) != len(names):
            raise ValueError("duplicate covariate names")
        for name in names:
            col = np.asarray(self.covariates[name], dtype=np.float64)
            if col.size != n:
                raise ValueError(f"covariate {name!r} length mismatch")
            if np.any(np.isnan(col)):
                raise ValueError(f"missing values in covariate {name!r}")
            self.covariates[name] = col

    def __len__(self) -> int:
        return int(self.y.size)


@dataclass
class OlsModel:
    terms: list[str]
    coef: dict[str, float]
    se: dict[str, float]
    pvalue: dict[str, float]
    r2: float
    residuals: np.ndarray
    n: int
    df_resid: int
    covariate_means: dict[str, float]
    period_shares: dict[object, float]
    baseline: object
    covariate_names: list[str] = field(default_factory=list)


def _design(table: ObservationTable, baseline) -> tuple[np.ndarray, list[str], list[object]]:
    levels = sorted(set(table.period.tolist()))
    if len(levels) < 2:
        # fixed effects degenerate to the intercept with a single period
        dummies = []
    else:
        if baseline is None:
            baseline = levels[0]
        if baseline not in levels:
            raise ValueError(f"baseline period {baseline!r} not present")
        dummies = [lv for lv in levels if lv != baseline]
    n = len(table)
    names = ["const"] + list(table.covariates) + [f"period[{lv}]" for lv in dummies]
    cols = [np.ones(n)]
    cols += [table.covariates[name] for name in table.covariates]
    for lv in dummies:
        cols.append((table.period == lv).astype(np.float64))
    return np.column_stack(cols), names, levels


def _rank_deficient_columns(X: np.ndarray, names: list[str], rank: int) -> list[str]:
    from scipy.linalg import qr

    _, _, piv = qr(X, mode="economic", pivoting=True)
    return sorted(names[j] for j in piv[rank:])


def ols_fixed_effects(table: ObservationTable, baseline=None) -> OlsModel:
    """Fit y on covariates plus period dummies (baseline period dropped)."""
    X, names, levels = _design(table, baseline)
    if baseline is None and len(levels) >= 2:
        baseline = levels[0]
    y = table.y
    n, k = X.shape
    if n <= k:
        raise ValueError(f"{n} rows cannot identify {k} parameters")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        raise CollinearityError(_rank_deficient_columns(X, names, rank))
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    df = n - k
    sigma2 = rss / df
    xtx_inv = np.linalg.inv(X.T @ X)
    se = np.sqrt(sigma2 * np.diag(xtx_inv))
    from scipy.stats import t as t_dist

    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf)
    pvals = 2.0 * t_dist.sf(np.abs(tvals), df)
    shares: dict[object, float] = {}
    for lv in levels:
        shares[lv] = float(np.mean(table.period == lv))
    return OlsModel(
        terms=names,
        coef={nm: float(b) for nm, b in zip(names, beta)},
        se={nm: float(s) for nm, s in zip(names, se)},
        pvalue={nm: float(p) for nm, p in zip(names, pvals)},
        r2=1.0 - rss / tss if tss > 0 else float("nan"),
        residuals=resid,
        n=n,
        df_resid=df,
        covariate_means={nm: float(col.mean()) for nm, col in table.covariates.items()},
        period_shares=shares,
        baseline=baseline,
        covariate_names=list(table.covariates),
    )


def marginal_effect(model: OlsModel, var: str, grid: np.ndarray) -> np.ndarray:
    """Predicted y over ``grid`` for one covariate.

    Other covariates sit at their sample means; period fixed effects enter
    at their sample-weighted average, so predictions are invariant to the
    choice of dropped baseline.
    """
    if var not in model.covariate_names:
        raise KeyError(f"unknown covariate {var!r}")
    grid = np.asarray(grid, dtype=np.float64)
    base = model.coef["const"]
    for nm in model.covariate_names:
        if nm != var:
            base += model.coef[nm] * model.covariate_means[nm]
    for lv, share in model.period_shares.items():
        term = f"period[{lv}]"
        if term in model.coef:
            base += model.coef[term] * share
    return base + model.coef[var] * grid
