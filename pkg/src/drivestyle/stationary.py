"""Quasi-stationary cornering and the curve-cutting gradient (CCG)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import DegenerateSpread, TooFewPoints

DEFAULT_KAPPA_RATE_MAX = 0.0005  # 1/(m s)
DEFAULT_MIN_DURATION = 1.0  # s
Z_95 = 1.96


@dataclass(frozen=True)
class StationarySegment:
    curve_id: int
    subject_id: str
    index: slice  # within the curve window
    mean_a_y: float  # curve-relative, inner-positive
    mean_dev: float
    duration: float


@dataclass(frozen=True)
class CCGResult:
    ccg: float  # m per m/s^2
    ccg0: float  # m
    ci_width: float  # m
    n_points: int
    r2: float


def _runs(mask):
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def extract_stationary(window, kappa_rate_max=DEFAULT_KAPPA_RATE_MAX,
                       min_duration=DEFAULT_MIN_DURATION):
    """Maximal runs of near-constant curvature inside a curve window.

    A sample is stationary when ``|dkappa/dt| <= kappa_rate_max``; runs
    lasting at least ``min_duration`` seconds become segments, each reduced
    to its mean curve-relative lateral acceleration and mean deviation.
    """
    samples = window.samples
    t = samples.t
    if len(t) < 2:
        return []
    dkappa = np.gradient(samples.kappa, t)
    stationary = np.abs(dkappa) <= kappa_rate_max
    out = []
    for a, b in _runs(stationary):
        duration = float(t[b - 1] - t[a])
        if duration < min_duration:
            continue
        dev = window.dev[a:b]
        if np.all(np.isnan(dev)):
            continue
        out.append(StationarySegment(
            curve_id=window.curve_id,
            subject_id=window.subject_id,
            index=slice(int(a), int(b)),
            mean_a_y=float(window.sign * np.mean(samples.a_y[a:b])),
            mean_dev=float(np.nanmean(dev)),
            duration=duration,
        ))
    return out


def fit_ccg(points):
    """Least-squares line ``dev = ccg * a_y + ccg0`` through stationary points.

    ``points`` is a sequence of ``(mean_a_y, mean_dev)`` pairs (or
    :class:`StationarySegment` objects). The consistency band width is
    ``2 * 1.96`` residual standard deviations (denominator n - 2).
    """
    pts = [(p.mean_a_y, p.mean_dev) if isinstance(p, StationarySegment) else p for p in points]
    arr = np.asarray(pts, dtype=float).reshape(-1, 2)
    n = arr.shape[0]
    if n < 3:
        raise TooFewPoints(f"need at least 3 points, got {n}")
    x, y = arr[:, 0], arr[:, 1]
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    sxx = float(dx @ dx)
    if sxx <= 1e-12 * max(1.0, float(x @ x)):
        raise DegenerateSpread("lateral acceleration values have no spread")
    slope = float(dx @ dy) / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    sse = float(resid @ resid)
    syy = float(dy @ dy)
    resid_sd = np.sqrt(sse / (n - 2))
    return CCGResult(
        ccg=slope,
        ccg0=float(intercept),
        ci_width=float(2 * Z_95 * resid_sd),
        n_points=n,
        r2=1.0 - sse / syy if syy > 0 else 1.0,
    )


def segments_frame(segments):
    return pd.DataFrame(
        {
            "subject_id": [s.subject_id for s in segments],
            "curve_id": [s.curve_id for s in segments],
            "mean_a_y": [s.mean_a_y for s in segments],
            "mean_dev": [s.mean_dev for s in segments],
            "duration": [s.duration for s in segments],
        }
    )
