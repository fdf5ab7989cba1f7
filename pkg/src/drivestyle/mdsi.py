"""Questionnaire scoring for the six-factor driving style inventory.

The item bank (factor membership, loadings, reverse-coded items) is data,
not code: :meth:`ItemBank.load` reads it from a delimited text file and
:meth:`ItemBank.default` returns the bundled six-factor model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    CohortTooSmall,
    DegenerateVariance,
    IncompleteScores,
    MissingAnswers,
    OutOfScale,
    SingularCorrelation,
)

SIX_FACTORS = ("Angry", "Risky", "Anxious", "Dissociative", "Careful", "DistressReduction")
SCORED_SOURCES = ("a",)
RIDGE = 1e-8


@dataclass(frozen=True)
class BankItem:
    item_id: str
    factor: str
    loading: float
    reversed: bool = False
    source: str = "a"


@dataclass(frozen=True)
class ItemBank:
    """Rows of (item, factor, loading, reversed, source).

    An item may appear under several factors, possibly reversed under one
    and not under another. Only rows whose ``source`` is in
    ``scored_sources`` and whose factor is in ``factors`` enter scoring.
    """

    items: tuple
    factors: tuple = SIX_FACTORS
    scale_min: int = 1
    scale_max: int = 6
    scored_sources: tuple = SCORED_SOURCES

    def __post_init__(self):
        for it in self.items:
            if not np.isfinite(it.loading):
                raise ValueError(f"item {it.item_id}: loading is not finite")
        for f in self.factors:
            if not any(r.factor == f and r.loading != 0 for r in self.scored_rows()):
                raise ValueError(f"factor {f!r} has no scored item with a nonzero loading")

    @classmethod
    def load(cls, path, factors=SIX_FACTORS, **kwargs):
        path = Path(path)
        sep = "\t" if "\t" in path.read_text(encoding="utf-8").splitlines()[0] else ","
        frame = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False)
        missing = {"item_id", "factor", "loading"} - set(frame.columns)
        if missing:
            raise ValueError(f"item bank {path} lacks columns {sorted(missing)}")
        items = tuple(
            BankItem(
                item_id=str(r["item_id"]).strip(),
                factor=str(r["factor"]).strip(),
                loading=float(r["loading"]),
                reversed=str(r.get("reversed", "")).strip().lower() in ("1", "true", "yes", "y"),
                source=str(r.get("source", "a")).strip() or "a",
            )
            for _, r in frame.iterrows()
        )
        return cls(items=items, factors=tuple(factors), **kwargs)

    @classmethod
    def default(cls):
        """The bundled six-factor model (see ``data/mdsi_six_factor.csv``)."""
        ref = resources.files("drivestyle") / "data" / "mdsi_six_factor.csv"
        with resources.as_file(ref) as path:
            return cls.load(path)

    def scored_rows(self):
        return [r for r in self.items if r.source in self.scored_sources and r.factor in self.factors]

    def item_ids(self, scored=True):
        rows = self.scored_rows() if scored else self.items
        seen = []
        for r in rows:
            if r.item_id not in seen:
                seen.append(r.item_id)
        return seen

    def factor_items(self, factor):
        return [r for r in self.scored_rows() if r.factor == factor]

    def loading_matrix(self):
        """Items x factors loadings, sign-flipped for reversed rows."""
        ids = self.item_ids()
        lam = pd.DataFrame(0.0, index=ids, columns=list(self.factors))
        for r in self.scored_rows():
            lam.loc[r.item_id, r.factor] += -r.loading if r.reversed else r.loading
        return lam


def reverse_code(answer, scale_min=1, scale_max=6):
    """Mirror an answer on the Likert scale (1 <-> 6 for a 6-point scale)."""
    if not scale_min <= answer <= scale_max:
        raise OutOfScale(f"answer {answer} outside [{scale_min}, {scale_max}]")
    return scale_min + scale_max - answer


def load_responses(path, bank=None, subject_column="subject_id"):
    """Read a responses table: one row per subject, one column per item.

    Item columns may be named ``<id>`` or ``item_<id>``. Empty cells become
    NaN (missing). Returns a float frame indexed by subject with columns
    named by bare item id.
    """
    path = Path(path)
    sep = "\t" if "\t" in path.read_text(encoding="utf-8").splitlines()[0] else ","
    frame = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False)
    frame = frame.set_index(frame[subject_column].str.strip()).drop(columns=[subject_column])
    frame.index.name = "subject_id"
    frame.columns = [c[5:] if c.startswith("item_") else c for c in frame.columns]
    out = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    if bank is not None:
        check_scale(out, bank)
    return out


def check_scale(responses, bank):
    vals = responses.to_numpy(dtype=float)
    bad = ~np.isnan(vals) & ((vals < bank.scale_min) | (vals > bank.scale_max))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise OutOfScale(
            f"subject {responses.index[i]!r}, item {responses.columns[j]}: {vals[i, j]} out of scale"
        )


def _coded(responses, bank, row):
    x = responses[row.item_id].to_numpy(dtype=float)
    return bank.scale_min + bank.scale_max - x if row.reversed else x


def weighted_sum_scores(responses, bank, strict=False):
    """Non-refined scores: loading-weighted mean of coded answers per factor.

    ``sum(loading_i * coded_i) / sum(|loading_i|)`` over the factor's items.
    A subject missing any item of a factor gets NaN for that factor, or
    :class:`MissingAnswers` with ``strict=True``.
    """
    _require_items(responses, bank)
    out = pd.DataFrame(index=responses.index, columns=list(bank.factors), dtype=float)
    for factor in bank.factors:
        rows = bank.factor_items(factor)
        num = np.zeros(len(responses))
        for r in rows:
            num = num + r.loading * _coded(responses, bank, r)
        out[factor] = num / sum(abs(r.loading) for r in rows)
        if strict:
            ids = [r.item_id for r in rows]
            gaps = responses[ids].isna()
            for sid in responses.index[gaps.any(axis=1)]:
                raise MissingAnswers(sid, [i for i in ids if gaps.loc[sid, i]])
    return out


def _require_items(responses, bank):
    absent = [i for i in bank.item_ids() if i not in responses.columns]
    if absent:
        raise MissingAnswers("<all>", absent)


def refined_scores(responses, bank, ridge=RIDGE):
    """Regression-method factor scores ``Z R^-1 Lambda``.

    ``Z`` holds the cohort-standardized answers of the scored items, ``R``
    their correlation matrix and ``Lambda`` the signed loading matrix.
    Subjects with any missing scored item are left out of the cohort and
    get NaN. If ``R`` is not positive definite a ridge of ``ridge`` is added
    to its diagonal before giving up.
    """
    _require_items(responses, bank)
    ids = bank.item_ids()
    lam = bank.loading_matrix()
    X = responses[ids]
    complete = ~X.isna().any(axis=1)
    Xc = X[complete].to_numpy(dtype=float)
    n, k = Xc.shape
    if n <= k:
        raise CohortTooSmall(f"{n} complete subjects for {k} scored items")
    sd = Xc.std(axis=0, ddof=1)
    live = sd > 0
    if not live.all():
        warnings.warn(f"{int((~live).sum())} items without variance ignored", stacklevel=2)
    Z = (Xc[:, live] - Xc[:, live].mean(axis=0)) / sd[live]
    R = Z.T @ Z / (n - 1)
    L = lam.to_numpy()[live]
    W = _solve_spd(R, L, ridge)
    scores = Z @ W
    out = pd.DataFrame(np.nan, index=responses.index, columns=list(bank.factors))
    out.loc[complete[complete].index] = scores
    return out


def _solve_spd(R, B, ridge):
    eye = np.eye(len(R))
    for eps in (0.0, ridge):
        M = R + eps * eye
        try:
            if np.linalg.cond(M) > 1e12:
                continue
            return cho_solve(cho_factor(M), B)
        except LinAlgError:
            continue
    raise SingularCorrelation("item correlation matrix is singular even with ridge")


class StyleAssignment(NamedTuple):
    style: str
    tie: bool


def assign_style(scores, factors=SIX_FACTORS):
    """Factor with the highest score; ties resolve to the earliest factor.

    ``scores`` is a mapping or a sequence ordered like ``factors``.
    """
    if hasattr(scores, "keys"):
        vals = [scores.get(f, np.nan) for f in factors]
    else:
        vals = list(scores)
    vals = np.asarray(vals, dtype=float)
    if vals.size != len(factors) or np.isnan(vals).any():
        raise IncompleteScores("all factor scores are required")
    best = vals.max()
    hits = np.flatnonzero(vals == best)
    return StyleAssignment(factors[int(hits[0])], bool(hits.size > 1))


def cronbach_alpha(items):
    """Internal consistency of a subjects x items answer matrix (ddof 1)."""
    X = np.asarray(items, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 subjects and 2 items")
    k = X.shape[1]
    total = X.sum(axis=1).var(ddof=1)
    if total == 0:
        raise DegenerateVariance("item sum has zero variance")
    return k / (k - 1) * (1 - X.var(axis=0, ddof=1).sum() / total)


def coded_factor_matrix(responses, bank, factor, all_sources=False):
    """Reverse-coded answers of one factor's items, complete subjects only."""
    if all_sources:
        rows = [r for r in bank.items if r.factor == factor]
    else:
        rows = bank.factor_items(factor)
    M = np.column_stack([_coded(responses, bank, r) for r in rows])
    return M[~np.isnan(M).any(axis=1)]


def reliability(responses, bank, all_sources=True):
    """Cronbach's alpha per factor.

    With ``all_sources`` every item listed under a factor counts
    (supplementary ones too) and every factor named in the bank is
    reported; otherwise only the scored items of the scoring factors.
    """
    if all_sources:
        factors = list(dict.fromkeys(r.factor for r in bank.items))
    else:
        factors = list(bank.factors)
    rows = []
    for factor in factors:
        M = coded_factor_matrix(responses, bank, factor, all_sources)
        try:
            alpha = cronbach_alpha(M)
        except (ValueError, DegenerateVariance):
            alpha = np.nan
        rows.append({"factor": factor, "alpha": alpha, "n_items": M.shape[1],
                     "n_subjects": M.shape[0]})
    return pd.DataFrame(rows)


def item_descriptives(responses, bank):
    """Mean and SD of every bank item, scored or supplementary."""
    ids = [i for i in bank.item_ids(scored=False) if i in responses.columns]
    sub = responses[ids]
    return pd.DataFrame({"item_id": ids, "mean": sub.mean().to_numpy(), "sd": sub.std(ddof=1).to_numpy()})


def score_cohort(responses, bank):
    """Non-refined and refined scores plus assigned style per subject.

    Refined scores are NaN (and ``refined_status`` says why) when the
    cohort cannot support them.
    """
    check_scale(responses, bank)
    nonref = weighted_sum_scores(responses, bank)
    status = "ok"
    try:
        ref = refined_scores(responses, bank)
    except (CohortTooSmall, SingularCorrelation) as exc:
        ref = pd.DataFrame(np.nan, index=responses.index, columns=list(bank.factors))
        status = type(exc).__name__
    out = pd.DataFrame(index=responses.index)
    for f in bank.factors:
        out[f"nonrefined_{f}"] = nonref[f]
    for f in bank.factors:
        out[f"refined_{f}"] = ref[f]
    styles, ties = [], []
    for sid in responses.index:
        try:
            a = assign_style(ref.loc[sid].to_dict(), bank.factors)
            styles.append(a.style)
            ties.append(a.tie)
        except IncompleteScores:
            styles.append("")
            ties.append(False)
    out["style"] = styles
    out["tie"] = ties
    missing = responses[bank.item_ids()].isna().any(axis=1)
    out["incomplete"] = missing.to_numpy()
    out.attrs["refined_status"] = status
    return out
