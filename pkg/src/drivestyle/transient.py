"""Transient cornering: four-segment curve codes, trajectory classes and
curve-cutting intensity."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .curves import CenterBand
from .errors import EmptySegment, NoEvaluableCurves, TooShort, ZeroDistance

SEGMENT_BOUNDS = (1 / 6, 1 / 2, 5 / 6)
SEGMENT_NAMES = ("entry", "first_half", "second_half", "exit")
INTENSITY_SCALE = 1000.0
MIN_SAMPLES = 8


class TrajectoryClass(enum.Enum):
    CENTER = "Center"
    EARLY_CUTTING = "Early Cutting"
    EARLY_COUNTER = "Early Counter"
    LATE_CUTTING = "Late Cutting"
    LATE_COUNTER = "Late Counter"
    CUTTING = "Cutting"
    COUNTER = "Counter"
    SEVERE_CUTTING = "Severe Cutting"
    SEVERE_COUNTER = "Severe Counter"
    BIASED_INNER = "Biased Inner"
    BIASED_OUTER = "Biased Outer"
    OSCILLATING = "Oscillating"
    OSCILLATING_CUTTING = "Oscillating Cutting"
    OSCILLATING_COUNTER = "Oscillating Counter"
    SLOW_SEVERE_CUTTING = "Slow Severe Cutting"
    SLOW_SEVERE_COUNTER = "Slow Severe Counter"
    UNCLASSIFIED = "Unclassified"

    @property
    def slug(self):
        return self.name.lower()


TC = TrajectoryClass

CLASS_CODES = {
    TC.CENTER: ("CCCC",),
    TC.EARLY_CUTTING: ("ICCC", "IICC"),
    TC.EARLY_COUNTER: ("OCCC", "OOCC"),
    TC.LATE_CUTTING: ("CCCI", "CCII"),
    TC.LATE_COUNTER: ("CCCO", "CCOO"),
    TC.CUTTING: ("OOII", "OIII", "CICC", "CCIC", "CIIC"),
    TC.COUNTER: ("IIOO", "IOOO", "COCC", "CCOC", "COOC"),
    TC.SEVERE_CUTTING: ("OIIO", "OIIC", "OCIC", "OCIO", "OICO", "OICC", "OCII", "COII"),
    TC.SEVERE_COUNTER: ("IOOI", "IOOC", "ICOC", "ICOI", "IOCI", "IOCC", "ICOO", "CIOO"),
    TC.BIASED_INNER: ("CIII", "IIIC", "IIII"),
    TC.BIASED_OUTER: ("COOO", "OOOC", "OOOO"),
    TC.OSCILLATING: ("OCOI", "ICIO", "CIOC", "COIC", "CCIO", "CCOI"),
    TC.OSCILLATING_CUTTING: ("CICI", "ICIC", "ICII", "IICI"),
    TC.OSCILLATING_COUNTER: ("COCO", "OCOC", "OCOO", "OOCO"),
    TC.SLOW_SEVERE_CUTTING: ("OCCI",),
    TC.SLOW_SEVERE_COUNTER: ("ICCO",),
}

CLASSES = tuple(CLASS_CODES)  # the 16 named classes, table order


def build_code_table(class_codes=CLASS_CODES):
    """Invert the class table, refusing codes listed under two classes."""
    table = {}
    for cls, codes in class_codes.items():
        for code in codes:
            if len(code) != 4 or set(code) - set("CIO"):
                raise ValueError(f"malformed curve code {code!r}")
            if code in table:
                raise ValueError(f"code {code} mapped to both {table[code].value} and {cls.value}")
            table[code] = cls
    return table


CODE_TABLE = build_code_table()


@dataclass(frozen=True)
class IntensityResult:
    code: str
    trajectory_class: TrajectoryClass
    intensity: float  # x1000
    curve_id: int = -1
    subject_id: str = ""

    @property
    def raw_intensity(self):
        return self.intensity / INTENSITY_SCALE


def _half_width(band):
    return band.half_width if isinstance(band, CenterBand) else float(band)


def segment_curve(window):
    """Split a curve window into entry, two halves and exit by arc length.

    Cut points sit at 1/6, 1/2 and 5/6 of the driven distance; a sample
    exactly on a cut point belongs to the earlier segment. Returns four
    slices into the window.
    """
    s = np.asarray(window.s, dtype=float)
    n = len(s)
    if n < MIN_SAMPLES:
        raise TooShort(f"curve window has {n} samples, need {MIN_SAMPLES}")
    span = s[-1] - s[0]
    if span <= 0:
        raise TooShort("curve window has zero arc length")
    frac = (s - s[0]) / span
    labels = np.searchsorted(SEGMENT_BOUNDS, frac, side="left")
    edges = [0] + [int(np.searchsorted(labels, k, side="left")) for k in (1, 2, 3)] + [n]
    slices = [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]
    if any(sl.stop <= sl.start for sl in slices):
        raise TooShort("a curve segment contains no samples")
    return slices


def label_segment(dev, band):
    """Label one segment Center, Inner or Outer.

    The segment is Center when the 75th percentile of ``|dev|`` lies inside
    the band. Otherwise the exceedances ``p75(dev) - w`` (inner side) and
    ``-w - p25(dev)`` (outer side) are compared and the larger positive one
    decides; ties go to Inner. If neither quantile leaves the band, the
    sign of the mean out-of-band deviation decides.
    """
    w = _half_width(band)
    dev = np.asarray(dev, dtype=float)
    dev = dev[~np.isnan(dev)]
    if dev.size == 0:
        raise EmptySegment("segment has no valid samples")
    if np.percentile(np.abs(dev), 75) <= w:
        return "C"
    p25, p75 = np.percentile(dev, [25, 75])
    inner = p75 - w
    outer = -w - p25
    if inner > 0 or outer > 0:
        return "I" if inner >= outer else "O"
    outside = dev[np.abs(dev) > w]
    return "I" if outside.mean() >= 0 else "O"


def encode_curve(window, band):
    """Four-letter curve code, one C/I/O label per segment."""
    return "".join(label_segment(window.dev[sl], band) for sl in segment_curve(window))


def classify(code):
    """Trajectory class of a curve code; unknown codes are ``UNCLASSIFIED``."""
    code = code.upper()
    if len(code) != 4 or set(code) - set("CIO"):
        raise ValueError(f"invalid curve code {code!r}")
    return CODE_TABLE.get(code, TC.UNCLASSIFIED)


def curve_intensity(t, dev, v_x, band):
    """Distance-normalized out-of-band area, scaled by 1000."""
    w = _half_width(band)
    excess = np.nan_to_num(np.maximum(np.abs(np.asarray(dev, dtype=float)) - w, 0.0))
    distance = trapezoid(v_x, t)
    if distance <= 0:
        raise ZeroDistance("curve window covers no distance")
    return float(trapezoid(excess, t) / distance * INTENSITY_SCALE)


def intensity(window, band):
    """Code, class and cutting intensity of one curve window."""
    code = encode_curve(window, band)
    return IntensityResult(
        code=code,
        trajectory_class=classify(code),
        intensity=curve_intensity(window.t, window.dev, window.v_x, band),
        curve_id=window.curve_id,
        subject_id=window.subject_id,
    )


def class_distribution(results):
    """Per-class share of curves (percent) and intensity statistics.

    Rows cover the 16 classes plus ``Unclassified``; intensity statistics
    of classes without curves are NaN.
    """
    results = list(results)
    if not results:
        raise NoEvaluableCurves("no evaluable curves")
    rows = []
    n = len(results)
    for cls in (*CLASSES, TC.UNCLASSIFIED):
        vals = np.array([r.intensity for r in results if r.trajectory_class is cls])
        has = vals.size > 0
        rows.append({
            "trajectory_class": cls.value,
            "n": int(vals.size),
            "percent": 100.0 * vals.size / n,
            "intensity_mean": float(vals.mean()) if has else np.nan,
            "intensity_median": float(np.median(vals)) if has else np.nan,
            "intensity_sd": float(vals.std()) if has else np.nan,
            "intensity_max": float(vals.max()) if has else np.nan,
        })
    return pd.DataFrame(rows).set_index("trajectory_class")


def cohort_class_table(per_subject, results):
    """Cohort summary: class percentages across subjects, intensities pooled
    over all curves of the class."""
    pct = pd.DataFrame({sid: d["percent"] for sid, d in per_subject.items()})
    rows = []
    for cls in (*CLASSES, TC.UNCLASSIFIED):
        p = pct.loc[cls.value].to_numpy(dtype=float)
        vals = np.array([r.intensity for r in results if r.trajectory_class is cls])
        rows.append({
            "trajectory_class": cls.value,
            "percent_mean": p.mean(),
            "percent_sd": p.std(ddof=1) if p.size > 1 else 0.0,
            "percent_max": p.max(),
            "intensity_mean": vals.mean() if vals.size else np.nan,
            "intensity_sd": vals.std(ddof=1) if vals.size > 1 else (0.0 if vals.size else np.nan),
            "intensity_max": vals.max() if vals.size else np.nan,
        })
    return pd.DataFrame(rows)
