import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivestyle.curves import (
    CurveOfInterest,
    compute_center_band,
    curve_relative_deviation,
    extract_window,
    select_curves,
)
from drivestyle.errors import CurveNotCovered, InsufficientStraightData, WindowContainsGap
from drivestyle.ingest import filter_context
from oracles import make_trace


def runs_oracle(s, kappa, tau, merge_gap, min_length):
    """Enumerate threshold runs with an explicit state machine."""
    runs = []
    i, n = 0, len(kappa)
    while i < n:
        if abs(kappa[i]) >= tau:
            j = i
            while j + 1 < n and abs(kappa[j + 1]) >= tau and np.sign(kappa[j + 1]) == np.sign(kappa[i]):
                j += 1
            runs.append([s[i], s[j], np.sign(kappa[i])])
            i = j + 1
        else:
            i += 1
    merged = []
    for r in runs:
        if merged and merged[-1][2] == r[2] and r[0] - merged[-1][1] < merge_gap:
            merged[-1][1] = r[1]
        else:
            merged.append(list(r))
    return [(a, b, "left" if d > 0 else "right") for a, b, d in merged if b - a >= min_length]


def test_single_left_curve():
    s = np.arange(0, 300.01, 0.5)
    kappa = np.where((s >= 100) & (s <= 200), 0.003, 0.0)
    (c,) = select_curves(s, kappa)
    assert (c.direction, c.start_s, c.end_s) == ("left", 100.0, 200.0)


def test_no_curve_below_threshold():
    s = np.arange(0, 300.0, 1.0)
    assert select_curves(s, np.full_like(s, 0.0019)) == []


def test_five_runs_two_merged():
    s = np.arange(0, 1000.0, 1.0)
    kappa = np.zeros_like(s)
    kappa[(s >= 50) & (s <= 120)] = 0.004
    kappa[(s >= 200) & (s <= 260)] = -0.003
    kappa[(s >= 266) & (s <= 330)] = -0.005  # 6 m after the previous run
    kappa[(s >= 500) & (s <= 600)] = 0.0025
    kappa[(s >= 800) & (s <= 880)] = -0.004
    curves = select_curves(s, kappa)
    expected = runs_oracle(s, kappa, 0.002, 10.0, 20.0)
    assert len(curves) == 4 == len(expected)
    for c, (a, b, d) in zip(curves, expected):
        assert (c.start_s, c.end_s, c.direction) == (a, b, d)
    assert curves[1].peak_kappa == -0.005


def test_sign_flip_splits_run():
    s = np.arange(0, 200.0, 1.0)
    kappa = np.where(s < 100, 0.004, -0.004)
    curves = select_curves(s, kappa)
    assert [c.direction for c in curves] == ["left", "right"]


profiles = st.lists(st.floats(-0.008, 0.008, allow_nan=False), min_size=5, max_size=60)


@settings(max_examples=100, deadline=None)
@given(profiles)
def test_select_matches_oracle_and_is_sorted(values):
    kappa = np.repeat(np.array(values), 7)
    s = np.arange(kappa.size) * 2.0
    curves = select_curves(s, kappa)
    assert [(c.start_s, c.end_s, c.direction) for c in curves] == runs_oracle(s, kappa, 0.002, 10.0, 20.0)
    for a, b in zip(curves[:-1], curves[1:]):
        assert a.end_s < b.start_s


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 0.008), min_size=5, max_size=60), st.floats(0.0005, 0.0019))
def test_lower_threshold_never_removes_a_curve(values, lower):
    kappa = np.repeat(np.array(values), 5)
    s = np.arange(kappa.size) * 2.0
    high = select_curves(s, kappa, 0.002)
    low = select_curves(s, kappa, lower)
    for c in high:
        assert any(d.start_s <= c.start_s and c.end_s <= d.end_s for d in low)


def test_deviation_convention():
    assert curve_relative_deviation(0.2, "left") == pytest.approx(0.2)
    assert curve_relative_deviation(0.2, "right") == pytest.approx(-0.2)


def curve_trace(sign=1.0, n=1000, v=20.0, d=None, flags=None):
    t = np.arange(n) / 50.0
    s = v * t
    kappa = np.where((s > 100) & (s < 300), sign * 0.004, 0.0)
    if d is None:
        d = 0.3 * np.sin(s / 40.0)
    return make_trace(t, v, sign * d, kappa=kappa, a_y=kappa * v * v, lane_change=flags)


def test_window_arc_length_on_centerline():
    tr = curve_trace(d=np.zeros(1000))
    (c,) = select_curves(tr.s, tr.kappa)
    w = extract_window(tr, c)
    assert w.arc_length == pytest.approx(c.end_s - c.start_s, rel=0.01)


def test_window_range_linear_search_oracle():
    rng = np.random.default_rng(2)
    t = np.arange(1500) / 50.0
    v = 15 + 5 * rng.random(1500)
    tr = make_trace(t, v, 0.0)
    curve = CurveOfInterest(1, "right", 123.4, 321.0, -0.003)
    w = extract_window(tr, curve)
    lo = next(i for i, x in enumerate(tr.s) if x >= curve.start_s)
    hi = max(i for i, x in enumerate(tr.s) if x <= curve.end_s) + 1
    assert (w.index.start, w.index.stop) == (lo, hi)


def test_window_errors():
    flags = np.zeros(1000, bool)
    flags[400:450] = True
    tr = filter_context(curve_trace(flags=flags))
    (c,) = select_curves(curve_trace().s, curve_trace().kappa)
    with pytest.raises(WindowContainsGap):
        extract_window(tr, c)
    with pytest.raises(CurveNotCovered):
        extract_window(tr, CurveOfInterest(2, "left", 300.0, 5000.0, 0.003))


def test_mirrored_trajectories_give_identical_dev():
    left = curve_trace(1.0)
    right = curve_trace(-1.0)
    (cl,) = select_curves(left.s, left.kappa)
    (cr,) = select_curves(right.s, right.kappa)
    assert (cl.direction, cr.direction) == ("left", "right")
    np.testing.assert_array_equal(extract_window(left, cl).dev, extract_window(right, cr).dev)


def test_center_band_mean_of_sds():
    t = np.arange(400) / 50.0
    pattern = np.tile([1.0, -1.0], 200)
    a = make_trace(t, 20.0, 0.20 * pattern, subject_id="a")
    b = make_trace(t, 20.0, 0.28 * pattern, subject_id="b")
    band = compute_center_band([a, b])
    assert band.half_width == pytest.approx(0.24)
    assert band.per_subject_sd == pytest.approx({"a": 0.20, "b": 0.28})


def test_center_band_constant_and_insufficient():
    t = np.arange(200) / 50.0
    assert compute_center_band([make_trace(t, 20.0, 0.1)]).half_width == 0.0
    with pytest.raises(InsufficientStraightData):
        compute_center_band([make_trace(t[:50], 20.0, 0.1)])
    city = make_trace(t, 20.0, 0.1, road_type="city")
    with pytest.raises(InsufficientStraightData):
        compute_center_band([city])
