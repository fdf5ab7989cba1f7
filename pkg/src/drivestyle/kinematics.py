"""Jerk, relative drift velocity and the eight-statistic summary."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.signal import savgol_filter

from .errors import EmptySeries, NoEvaluableCurves, WindowTooLarge

DEFAULT_HALF_WINDOW = 5
DEFAULT_V_MIN = 1.0  # m/s

STAT_NAMES = ("absmax", "max", "min", "mean", "median", "sd", "rms", "idr")


@dataclass(frozen=True)
class StatBlock:
    absmax: float
    max: float
    min: float
    mean: float
    median: float
    sd: float
    rms: float
    idr: float

    def as_dict(self):
        return asdict(self)

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)])


def differentiate_smoothed(series, rate_hz, half_window=DEFAULT_HALF_WINDOW):
    """Derivative from a sliding second-order polynomial fit.

    The fit spans ``2 * half_window + 1`` samples and is evaluated at the
    center; the first and last ``half_window`` samples use the one-sided
    fit over the edge window. Exact for polynomials up to degree two.
    """
    series = np.asarray(series, dtype=float)
    if half_window < 1:
        raise ValueError("half_window must be >= 1")
    width = 2 * half_window + 1
    if series.size < width:
        raise WindowTooLarge(f"window of {width} samples exceeds series length {series.size}")
    return savgol_filter(series, width, polyorder=2, deriv=1, delta=1.0 / rate_hz, mode="interp")


def differentiate_segments(series, segments, rate_hz, half_window=DEFAULT_HALF_WINDOW):
    """Apply :func:`differentiate_smoothed` segment by segment.

    Segments shorter than the smoothing window come back as NaN.
    """
    out = np.full(len(series), np.nan)
    for sl in segments:
        chunk = series[sl]
        if len(chunk) >= 2 * half_window + 1:
            out[sl] = differentiate_smoothed(chunk, rate_hz, half_window)
    return out


def drift_velocity(d_cl, v_x, rate_hz, half_window=DEFAULT_HALF_WINDOW, v_min=DEFAULT_V_MIN):
    """Relative drift velocity in percent: lateral over longitudinal speed.

    Samples with ``v_x < v_min`` are returned as NaN.
    """
    v_x = np.asarray(v_x, dtype=float)
    rate = differentiate_smoothed(d_cl, rate_hz, half_window)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = rate * 100.0 / v_x
    out[v_x < v_min] = np.nan
    return out


def derive_channels(trace, half_window=DEFAULT_HALF_WINDOW, v_min=DEFAULT_V_MIN):
    """Jerk and drift channels over a whole trace, computed per segment.

    Returns a dict with ``k_x``, ``k_y`` (m/s^3) and ``v_drift`` (%) aligned
    with the trace samples.
    """
    segments = trace.segment_slices()
    rate = trace.sample_rate_hz
    d_cl = np.where(trace.valid, trace.d_CL, np.nan)
    d_rate = differentiate_segments(np.nan_to_num(d_cl), segments, rate, half_window)
    # a derivative touching an invalid sample is unusable
    touched = np.convolve((~trace.valid).astype(float), np.ones(2 * half_window + 1), "same") > 0
    d_rate[touched] = np.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        v_drift = d_rate * 100.0 / trace.v_x
    v_drift[trace.v_x < v_min] = np.nan
    return {
        "k_x": differentiate_segments(trace.a_x, segments, rate, half_window),
        "k_y": differentiate_segments(trace.a_y, segments, rate, half_window),
        "v_drift": v_drift,
    }


def stat_block(series):
    """The eight summary statistics of a series; NaN entries are ignored.

    Percentiles interpolate linearly between closest ranks, the SD uses
    denominator n.
    """
    x = np.asarray(series, dtype=float)
    x = x[~np.isnan(x)]
    if x.size == 0:
        raise EmptySeries("series has no finite values")
    p10, p50, p90 = np.percentile(x, [10, 50, 90])
    hi, lo = float(x.max()), float(x.min())
    return StatBlock(
        absmax=max(abs(hi), abs(lo)),
        max=hi,
        min=lo,
        mean=float(x.mean()),
        median=float(p50),
        sd=float(x.std()),
        rms=float(np.sqrt(np.mean(x * x))),
        idr=float(p90 - p10),
    )


def aggregate_subject(blocks, mode="mean"):
    """Field-wise mean or median over per-curve blocks."""
    blocks = list(blocks)
    if not blocks:
        raise NoEvaluableCurves("no per-curve statistics to aggregate")
    if mode not in ("mean", "median"):
        raise ValueError(f"mode must be 'mean' or 'median', got {mode!r}")
    stacked = np.array([b.as_array() for b in blocks])
    agg = stacked.mean(axis=0) if mode == "mean" else np.median(stacked, axis=0)
    return StatBlock(*map(float, agg))
