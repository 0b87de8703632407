"""Ordinary least squares with the usual inference stats.

Used for the district-feature analysis: regress the privacy gap (mean private
dissimilarity minus non-private dissimilarity) on demographic shares, district
size, locale indicators, and the current dissimilarity index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

log = logging.getLogger(__name__)

LOCALES = ("rural", "small_city", "suburban", "urban")


@dataclass(frozen=True)
class RegressionResult:
    feature_names: tuple[str, ...]
    coef: np.ndarray
    stderr: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    conf_low: np.ndarray
    conf_high: np.ndarray
    r2: float
    adj_r2: float
    n: int
    df_resid: int
    dropped: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "features": [
                {
                    "name": name,
                    "coef": float(self.coef[i]),
                    "stderr": float(self.stderr[i]),
                    "t": float(self.tvalues[i]),
                    "p": float(self.pvalues[i]),
                    "ci_low": float(self.conf_low[i]),
                    "ci_high": float(self.conf_high[i]),
                }
                for i, name in enumerate(self.feature_names)
            ],
            "r2": self.r2,
            "adj_r2": self.adj_r2,
            "n": self.n,
            "df_resid": self.df_resid,
            "dropped": list(self.dropped),
        }


def ols_regress(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str] | None = None,
    ci_level: float = 0.95,
) -> RegressionResult:
    """Fit y = X b by least squares; X must include its own intercept column.

    Coefficients come from a QR-based solve (numpy lstsq), standard errors
    from sigma^2 (X'X)^-1, p-values from the two-sided Student t with n - p
    degrees of freedom. R^2 is centered, so it assumes an intercept column.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("X must be a 2-d design matrix")
    n, p = X.shape
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]}")
    if n <= p:
        raise ValueError(f"need more observations than parameters (n={n}, p={p})")
    if np.linalg.matrix_rank(X) < p:
        raise np.linalg.LinAlgError("design matrix is rank deficient")
    if feature_names is None:
        feature_names = tuple(f"x{i}" for i in range(p))
    else:
        feature_names = tuple(feature_names)
        if len(feature_names) != p:
            raise ValueError("feature_names length does not match design columns")

    coef, _, _, _ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    df = n - p
    rss = float(resid @ resid)
    sigma2 = rss / df
    cov = sigma2 * np.linalg.inv(X.T @ X)
    stderr = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(stderr > 0, coef / stderr, np.inf * np.sign(coef))
    pvals = 2.0 * stats.t.sf(np.abs(tvals), df)
    tcrit = stats.t.ppf(0.5 + ci_level / 2.0, df)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / ss_tot if ss_tot > 0 else 1.0
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / df

    return RegressionResult(
        feature_names=feature_names,
        coef=coef,
        stderr=stderr,
        tvalues=tvals,
        pvalues=pvals,
        conf_low=coef - tcrit * stderr,
        conf_high=coef + tcrit * stderr,
        r2=r2,
        adj_r2=adj_r2,
        n=n,
        df_resid=df,
    )


def repair_rank(
    X: np.ndarray, feature_names: Sequence[str]
) -> tuple[np.ndarray, tuple[str, ...], tuple[str, ...]]:
    """Drop columns until the design has full column rank.

    Zero-variance non-intercept columns go first (e.g. a locale indicator that
    never occurs), then any column that does not increase the rank of the
    columns kept so far. Keeps the earliest columns, so the intercept always
    survives. Returns (X_kept, kept_names, dropped_names).
    """
    X = np.asarray(X, dtype=float)
    names = list(feature_names)
    keep: list[int] = []
    dropped: list[str] = []
    for j in range(X.shape[1]):
        col = X[:, j]
        if j > 0 and np.ptp(col) == 0.0:
            dropped.append(names[j])
            continue
        trial = X[:, keep + [j]]
        if np.linalg.matrix_rank(trial) == len(keep) + 1:
            keep.append(j)
        else:
            dropped.append(names[j])
    if dropped:
        log.warning("rank repair dropped collinear/constant columns: %s", dropped)
    return X[:, keep], tuple(names[i] for i in keep), tuple(dropped)
