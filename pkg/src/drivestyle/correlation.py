"""Pearson and partial Pearson correlations with two-tailed p-values."""

from __future__ import annotations

import numpy as np
import pandas as pd
from scipy.special import betainc

from .errors import CollinearCovariates, DataError, DegenerateVariance, LengthMismatch

TIERS = ((0.001, "<.001"), (0.01, "<.01"), (0.05, "<.05"))


def pearson(x, y):
    """Sample Pearson correlation. Returns ``(r, n)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise DegenerateVariance(f"need at least 3 observations, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    tiny = 1e-24 * n
    if sxx <= tiny * max(1.0, (x @ x) / n) or syy <= tiny * max(1.0, (y @ y) / n):
        raise DegenerateVariance("a series has zero variance")
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0)), n


def _residualize(v, design):
    beta, *_ = np.linalg.lstsq(design, v, rcond=None)
    return v - design @ beta


def partial_pearson(x, y, covariates=None):
    """Correlation of x and y after regressing both on ``[1, covariates]``.

    Returns ``(r, n, df)`` with ``df = n - 2 - k`` for ``k`` covariates.
    Without covariates this is exactly :func:`pearson`.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    n = x.size
    C = np.zeros((n, 0)) if covariates is None else np.asarray(covariates, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    if C.shape[0] != n:
        raise LengthMismatch("covariates do not match the series length")
    k = C.shape[1]
    if k == 0:
        r, n = pearson(x, y)
        return r, n, n - 2
    if n <= k + 2:
        raise DegenerateVariance(f"n = {n} too small for {k} covariates")
    design = np.column_stack([np.ones(n), C])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise CollinearCovariates("covariates are collinear (with the intercept)")
    rx = _residualize(x, design)
    ry = _residualize(y, design)
    scale_x = max(np.abs(x - x.mean()).max(), 1e-300)
    scale_y = max(np.abs(y - y.mean()).max(), 1e-300)
    if np.abs(rx).max() <= 1e-10 * scale_x or np.abs(ry).max() <= 1e-10 * scale_y:
        raise DegenerateVariance("a series is fully explained by the covariates")
    r, _ = pearson(rx, ry)
    return r, n, n - 2 - k


def p_two_tailed(r, df):
    """Two-tailed p-value of a correlation under Student's t with ``df``.

    Uses ``P(|T| > t) = I_{df/(df+t^2)}(df/2, 1/2)`` with the regularized
    incomplete beta function.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    r = float(r)
    if abs(r) >= 1.0:
        return 0.0
    t2 = r * r * df / (1.0 - r * r)
    return float(betainc(df / 2.0, 0.5, df / (df + t2)))


def significance_tier(p):
    if not np.isfinite(p):
        return ""
    for cut, label in TIERS:
        if p < cut:
            return label
    return "ns"


def stars(p):
    return {"<.001": "***", "<.01": "**", "<.05": "*"}.get(significance_tier(p), "")


def covariate_matrix(profiles):
    """Age and a 0/1 male indicator; further genders get one-hot columns
    with ``female`` as reference."""
    frame = pd.DataFrame(index=profiles.index)
    frame["age"] = profiles["age"].astype(float)
    genders = sorted(set(profiles["gender"]) - {"female"})
    for g in genders:
        frame[f"gender_{g}"] = (profiles["gender"] == g).astype(float)
    return frame


def correlate_all(scores, indicators, covariates=None, min_n=3):
    """Every factor score against every indicator.

    Subjects are matched on the index; each pair uses the subjects with
    finite score, indicator and covariates (pairwise deletion). Pairs that
    cannot be computed are kept as rows with NaN ``r`` and an ``error``.

    Indicator columns with fewer than ``min_n`` finite values are skipped.
    """
    subjects = scores.index.intersection(indicators.index)
    if covariates is not None:
        subjects = subjects.intersection(covariates.index)
    S = scores.loc[subjects]
    X = indicators.loc[subjects]
    C = covariates.loc[subjects].to_numpy(dtype=float) if covariates is not None else None
    cov_ok = np.isfinite(C).all(axis=1) if C is not None else np.ones(len(subjects), bool)

    valid_cols = [c for c in X.columns if np.isfinite(X[c].to_numpy(dtype=float)).sum() >= min_n]
    rows = []
    for factor in S.columns:
        s = S[factor].to_numpy(dtype=float)
        for col in valid_cols:
            x = X[col].to_numpy(dtype=float)
            ok = np.isfinite(s) & np.isfinite(x) & cov_ok
            n = int(ok.sum())
            row = {"factor": factor, "indicator": col, "r": np.nan, "p": np.nan, "n": n,
                   "df": np.nan, "tier": "", "error": ""}
            try:
                r, n, df = partial_pearson(s[ok], x[ok], None if C is None else C[ok])
                p = p_two_tailed(r, df) if df >= 1 else np.nan
                row.update(r=r, p=p, n=n, df=df, tier=significance_tier(p))
            except DataError as exc:
                row["error"] = type(exc).__name__
            rows.append(row)
    return pd.DataFrame(rows, columns=["factor", "indicator", "r", "p", "n", "df", "tier", "error"])


def summary_counts(table):
    """Counts per tier plus the count expected by chance with no correction."""
    ok = table[table["error"] == ""]
    m = len(ok)
    return {
        "tests": m,
        "p<.05": int((ok["p"] < 0.05).sum()),
        "p<.01": int((ok["p"] < 0.01).sum()),
        "p<.001": int((ok["p"] < 0.001).sum()),
        "expected_p<.05": 0.05 * m,
        "expected_p<.01": 0.01 * m,
        "expected_p<.001": 0.001 * m,
    }
