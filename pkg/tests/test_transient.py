import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivestyle.curves import CenterBand, CurveOfInterest, extract_window
from drivestyle.errors import EmptySegment, NoEvaluableCurves, TooShort, ZeroDistance
from drivestyle.transient import (
    CLASS_CODES,
    CLASSES,
    IntensityResult,
    TrajectoryClass,
    build_code_table,
    class_distribution,
    classify,
    curve_intensity,
    encode_curve,
    intensity,
    label_segment,
    segment_curve,
)
from oracles import generated_window, make_trace, segment_bisection, sorted_percentile

TC = TrajectoryClass
RATE = 50.0


def window_with_dev(dev, v=20.0, direction="left"):
    dev = np.asarray(dev, dtype=float)
    n = dev.size
    t = np.arange(n) / RATE
    sign = 1.0 if direction == "left" else -1.0
    v = np.broadcast_to(np.asarray(v, dtype=float), (n,))
    tr = make_trace(t, v, sign * dev, kappa=sign * 0.004, rate_hz=RATE)
    return extract_window(tr, CurveOfInterest(1, direction, float(tr.s[0]), float(tr.s[-1]),
                                              sign * 0.004))


def test_uniform_speed_split():
    w = window_with_dev(np.zeros(600))
    sizes = [sl.stop - sl.start for sl in segment_curve(w)]
    assert sizes == [100, 200, 200, 100]


def test_arc_fractions():
    w = window_with_dev(np.zeros(6001))
    s = w.s
    span = s[-1] - s[0]
    fr = [(s[sl.stop - 1] - s[sl.start]) / span for sl in segment_curve(w)]
    np.testing.assert_allclose(fr, [1 / 6, 1 / 3, 1 / 3, 1 / 6], atol=2e-3)


def test_variable_speed_split_matches_bisection():
    rng = np.random.default_rng(7)
    v = 12 + 8 * rng.random(700)
    w = window_with_dev(np.zeros(700), v=v)
    ends = [sl.stop for sl in segment_curve(w)[:3]]
    assert ends == segment_bisection(w.s)


def test_too_short():
    with pytest.raises(TooShort):
        segment_curve(window_with_dev(np.zeros(7)))


def test_label_examples():
    assert label_segment(np.zeros(50), 0.24) == "C"
    assert label_segment(np.full(50, 0.5), 0.24) == "I"
    assert label_segment(np.full(50, -0.5), 0.24) == "O"
    with pytest.raises(EmptySegment):
        label_segment([np.nan, np.nan], 0.24)


def test_label_uses_center_band_object():
    band = CenterBand(half_width=0.24, per_subject_sd={})
    assert label_segment(np.full(10, 0.3), band) == "I"


def test_oscillating_quantile_oracle():
    # 1001 samples whose quartiles are -0.26 and +0.30
    dev = np.concatenate([np.full(250, -0.5), np.full(1, -0.26), np.zeros(499),
                          np.full(1, 0.30), np.full(250, 0.6)])
    p25, p75 = sorted_percentile(dev, 25), sorted_percentile(dev, 75)
    assert p25 == pytest.approx(-0.26, abs=1e-3) and p75 == pytest.approx(0.30, abs=1e-3)
    assert sorted_percentile(np.abs(dev), 75) > 0.24
    assert label_segment(dev, 0.24) == "I"
    assert label_segment(-dev, 0.24) == "O"


def test_tie_goes_inner():
    dev = np.concatenate([np.full(40, -0.5), np.full(20, 0.0), np.full(40, 0.5)])
    assert label_segment(dev, 0.24) == "I"


def test_encode_examples():
    assert encode_curve(window_with_dev(np.zeros(600)), 0.24) == "CCCC"
    assert encode_curve(generated_window("CIII"), 0.24) == "CIII"


def test_classify_examples():
    assert classify("CCCC") is TC.CENTER
    assert classify("CIII") is TC.BIASED_INNER
    assert classify("IICC") is TC.EARLY_CUTTING
    assert classify("OIOI") is TC.UNCLASSIFIED
    with pytest.raises(ValueError):
        classify("CCXC")


@pytest.mark.parametrize("cls", CLASSES, ids=lambda c: c.slug)
@pytest.mark.parametrize("direction", ["left", "right"])
def test_generator_round_trip(cls, direction):
    for code in CLASS_CODES[cls]:
        w = generated_window(code, direction)
        got = encode_curve(w, 0.24)
        assert got == code
        assert classify(got) is cls


def test_code_table_complete_and_unique():
    codes = [c for cs in CLASS_CODES.values() for c in cs]
    assert len(codes) == len(set(codes)) == 57
    assert len(CLASSES) == 16
    with pytest.raises(ValueError):
        build_code_table({TC.CENTER: ("CCCC",), TC.CUTTING: ("CCCC",)})


def test_classify_total_over_all_codes():
    import itertools
    seen = {classify("".join(c)) for c in itertools.product("CIO", repeat=4)}
    assert TC.UNCLASSIFIED in seen and len(seen) == 17


def test_intensity_inside_band_zero():
    assert curve_intensity(np.arange(100) / RATE, np.full(100, 0.1), np.full(100, 20.0), 0.24) == 0


def test_constant_offset_intensity():
    t = np.arange(501) / RATE  # 10 s
    got = curve_intensity(t, np.full(501, 0.34), np.full(501, 20.0), 0.24)
    assert got == pytest.approx(5.0, abs=1e-9)


def test_sinusoid_intensity_against_oversampled_oracle():
    f = lambda tt: 0.5 * np.sin(2 * np.pi * tt / 3.0)  # noqa: E731
    t = np.arange(601) / RATE
    got = curve_intensity(t, f(t), np.full_like(t, 18.0), 0.24)
    fine = np.linspace(t[0], t[-1], 10 * (len(t) - 1) + 1)
    excess = np.maximum(np.abs(f(fine)) - 0.24, 0)
    h = fine[1] - fine[0]
    area = h * (excess.sum() - 0.5 * (excess[0] + excess[-1]))
    want = area / (18.0 * (t[-1] - t[0])) * 1000
    assert got == pytest.approx(want, rel=5e-3)


def test_zero_distance():
    with pytest.raises(ZeroDistance):
        curve_intensity(np.arange(10.0), np.zeros(10), np.zeros(10), 0.24)


def test_mirror_invariance():
    rng = np.random.default_rng(3)
    dev = np.cumsum(rng.normal(0, 0.02, 600))
    a = intensity(window_with_dev(dev, direction="left"), 0.24)
    b = intensity(window_with_dev(dev, direction="right"), 0.24)
    assert (a.code, a.trajectory_class, a.intensity) == (b.code, b.trajectory_class, b.intensity)


devs = st.lists(st.floats(-1.5, 1.5), min_size=8, max_size=120)


@settings(max_examples=100, deadline=None)
@given(devs, st.floats(0.01, 0.5), st.floats(0.0, 0.5))
def test_widening_band_is_monotone(values, w, extra):
    dev = np.array(values)
    if label_segment(dev, w) == "C":
        assert label_segment(dev, w + extra) == "C"
    t = np.arange(dev.size) / RATE
    v = np.full(dev.size, 15.0)
    assert curve_intensity(t, dev, v, w + extra) <= curve_intensity(t, dev, v, w) + 1e-12
    assert curve_intensity(t, dev, v, w) >= 0


def result(cls, value=0.0):
    return IntensityResult("", cls, value)


def test_distribution_examples():
    d = class_distribution([result(TC.CENTER)] * 4)
    assert d.loc["Center", "percent"] == 100 and d.loc["Center", "intensity_max"] == 0
    d = class_distribution([result(TC.CENTER), result(TC.CUTTING, 2.0), result(TC.CUTTING, 4.0)])
    assert d.loc["Center", "percent"] == pytest.approx(100 / 3)
    assert d.loc["Cutting", "percent"] == pytest.approx(200 / 3)
    assert d.loc["Cutting", "intensity_mean"] == 3.0
    assert np.isnan(d.loc["Counter", "intensity_mean"])
    with pytest.raises(NoEvaluableCurves):
        class_distribution([])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(list(TC)), min_size=1, max_size=80))
def test_percentages_sum_to_100(classes):
    d = class_distribution([result(c) for c in classes])
    assert len(d) == 17
    assert d["percent"].sum() == pytest.approx(100.0, abs=1e-9)
