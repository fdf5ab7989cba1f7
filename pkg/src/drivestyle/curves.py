"""Curves of interest, per-subject curve windows and the center band."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd

from .errors import (
    CurveNotCovered,
    EmptyProfile,
    InsufficientStraightData,
    WindowContainsGap,
)

TAU_KAPPA = 0.002  # 1/m, i.e. a 500 m radius
DEFAULT_MERGE_GAP = 10.0
DEFAULT_MIN_LENGTH = 20.0


@dataclass(frozen=True)
class CurveOfInterest:
    curve_id: int
    direction: str  # "left" or "right"
    start_s: float
    end_s: float
    peak_kappa: float

    def __post_init__(self):
        if self.direction not in ("left", "right"):
            raise ValueError(f"direction must be 'left' or 'right', got {self.direction!r}")
        if not self.end_s > self.start_s:
            raise ValueError("end_s must exceed start_s")

    @property
    def sign(self):
        """+1 for left curves, -1 for right curves."""
        return 1.0 if self.direction == "left" else -1.0

    @property
    def length(self):
        return self.end_s - self.start_s


@dataclass(frozen=True, eq=False)
class CurveWindow:
    """One subject's samples through one curve.

    ``dev`` is the lateral deviation in the curve frame: positive toward the
    inside of the curve, NaN where ``d_CL`` was flagged invalid.
    """

    curve_id: int
    subject_id: str
    direction: str
    samples: object  # SubjectTrace slice
    index: slice
    dev: np.ndarray
    arc_length: float

    @property
    def sign(self):
        return 1.0 if self.direction == "left" else -1.0

    @property
    def t(self):
        return self.samples.t

    @property
    def v_x(self):
        return self.samples.v_x

    @property
    def s(self):
        return self.samples.s

    def __len__(self):
        return len(self.dev)


@dataclass(frozen=True)
class CenterBand:
    half_width: float
    per_subject_sd: Mapping[str, float] = field(default_factory=dict)


def _runs(mask):
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def select_curves(s, kappa, tau_kappa=TAU_KAPPA, merge_gap=DEFAULT_MERGE_GAP,
                  min_length=DEFAULT_MIN_LENGTH, mask=None):
    """Threshold an arc-length indexed curvature profile into curves.

    Samples with ``|kappa| >= tau_kappa`` (and ``mask`` true, if given) form
    runs; a run also ends where the curvature sign flips. Same-signed runs
    separated by less than ``merge_gap`` meters are merged, and merged
    curves shorter than ``min_length`` are discarded.

    Returns
    -------
    list of CurveOfInterest
        Sorted by ``start_s``, disjoint, numbered from 1.
    """
    s = np.asarray(s, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if s.size == 0 or s.size != kappa.size:
        raise EmptyProfile("curvature profile is empty or misaligned")
    if tau_kappa <= 0:
        raise ValueError("tau_kappa must be positive")
    above = np.abs(kappa) >= tau_kappa
    if mask is not None:
        above &= np.asarray(mask, dtype=bool)
    # sign flips inside a run start a new run
    sign = np.sign(kappa)
    flip = np.concatenate(([False], sign[1:] != sign[:-1]))

    raw = []
    for a, b in _runs(above):
        cuts = [a] + [i for i in range(a + 1, b) if flip[i]] + [b]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            raw.append([lo, hi])

    merged = []
    for lo, hi in raw:
        if merged:
            plo, phi = merged[-1]
            same = np.sign(kappa[lo]) == np.sign(kappa[plo])
            if same and s[lo] - s[phi - 1] < merge_gap:
                merged[-1][1] = hi
                continue
        merged.append([lo, hi])

    curves = []
    for lo, hi in merged:
        start, end = s[lo], s[hi - 1]
        if end - start < min_length:
            continue
        seg = kappa[lo:hi]
        peak = float(seg[np.argmax(np.abs(seg))])
        curves.append(CurveOfInterest(
            curve_id=len(curves) + 1,
            direction="left" if peak > 0 else "right",
            start_s=float(start), end_s=float(end), peak_kappa=peak,
        ))
    return curves


def route_profile(trace, road_types=("rural",)):
    """Arc length and curvature of a reference drive.

    Curvature outside ``road_types`` is zeroed so those stretches never
    yield curves. Pass ``road_types=None`` to keep every road type.
    """
    kappa = trace.kappa.copy()
    if road_types is not None:
        kappa[~np.isin(trace.road_type, road_types)] = 0.0
    return trace.s.copy(), kappa


def curve_relative_deviation(d_cl, direction):
    """Lateral deviation with positive values toward the curve's inside."""
    sign = 1.0 if direction == "left" else -1.0
    return sign * np.asarray(d_cl, dtype=float)


def extract_window(trace, curve):
    """Slice the samples of ``trace`` whose arc length lies in the curve span."""
    s = trace.s
    if s[0] > curve.start_s or s[-1] < curve.end_s:
        raise CurveNotCovered(
            f"subject {trace.subject_id!r} does not cover curve {curve.curve_id}"
        )
    for gap in trace.gaps:
        if gap.overlaps(curve.start_s, curve.end_s):
            raise WindowContainsGap(
                f"subject {trace.subject_id!r}: filtered interval inside curve {curve.curve_id}"
            )
    lo = int(np.searchsorted(s, curve.start_s, side="left"))
    hi = int(np.searchsorted(s, curve.end_s, side="right"))
    if hi - lo < 2:
        raise WindowContainsGap(f"curve {curve.curve_id}: fewer than two samples in span")
    if trace.segment[lo] != trace.segment[hi - 1]:
        raise WindowContainsGap(f"curve {curve.curve_id}: segment boundary inside span")
    index = slice(lo, hi)
    samples = trace.take(index)
    dev = curve_relative_deviation(samples.d_CL, curve.direction)
    dev = np.where(samples.valid, dev, np.nan)
    return CurveWindow(
        curve_id=curve.curve_id,
        subject_id=trace.subject_id,
        direction=curve.direction,
        samples=samples,
        index=index,
        dev=dev,
        arc_length=float(samples.s[-1] - samples.s[0]),
    )


def straight_mask(trace, tau_kappa=TAU_KAPPA, road_types=("rural",)):
    mask = (np.abs(trace.kappa) < tau_kappa) & trace.valid
    if road_types is not None:
        mask &= np.isin(trace.road_type, road_types)
    return mask


def compute_center_band(traces, tau_kappa=TAU_KAPPA, road_types=("rural",), ddof=0,
                        min_samples=100):
    """Center-band half width: the cohort mean of per-subject SD of ``d_CL``
    on straight road samples."""
    per_subject = {}
    for trace in traces:
        d = trace.d_CL[straight_mask(trace, tau_kappa, road_types)]
        if d.size < min_samples:
            raise InsufficientStraightData(trace.subject_id, int(d.size))
        per_subject[trace.subject_id] = float(np.std(d, ddof=ddof))
    if not per_subject:
        raise ValueError("no traces given")
    return CenterBand(half_width=float(np.mean(list(per_subject.values()))),
                      per_subject_sd=per_subject)


def curves_frame(curves):
    return pd.DataFrame(
        {
            "curve_id": [c.curve_id for c in curves],
            "direction": [c.direction for c in curves],
            "start_s": [c.start_s for c in curves],
            "end_s": [c.end_s for c in curves],
            "peak_kappa": [c.peak_kappa for c in curves],
        }
    )


def curves_from_frame(frame):
    return [
        CurveOfInterest(int(r.curve_id), str(r.direction), float(r.start_s), float(r.end_s),
                        float(r.peak_kappa))
        for r in frame.itertuples(index=False)
    ]
