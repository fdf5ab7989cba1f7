import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivestyle.envelope import (
    EnvelopeConfig,
    center_angles,
    envelope_count,
    parallel_analysis,
    pca_varimax,
    polar_bin,
    varimax,
)
from drivestyle.errors import NonDivisorStride, RankDeficient, TooFewSubjects
from oracles import bin_oracle, correlation_matrix, jacobi_eigenvalues


def test_envelope_count_examples():
    assert envelope_count(15) == 24
    assert envelope_count(90) == 4
    with pytest.raises(NonDivisorStride):
        envelope_count(7)


def test_config_overlap_flag():
    assert EnvelopeConfig(10, 15).overlapping
    assert not EnvelopeConfig(7.5, 15).overlapping
    with pytest.raises(ValueError):
        EnvelopeConfig(0, 15)


def test_center_angles_signed_range():
    a = center_angles(15)
    assert a[0] == -165 and a[-1] == 180 and len(a) == 24


def test_pure_longitudinal_points_fill_zero_bin_only():
    env = polar_bin(np.linspace(0.5, 3, 20), np.zeros(20))
    assert list(env.angles[~env.empty]) == [0.0]
    assert env.max[env.angles == 0][0] == 3.0


def test_single_point_membership_enumeration():
    env = polar_bin([1.0], [1.0])
    populated = [a for a, n in zip(env.angles, env.counts) if n]
    # enumerate membership with plain circular distances
    expected = [c for c in env.angles if min(abs(45 - c) % 360, 360 - abs(45 - c) % 360) <= 10]
    assert populated == expected == [45.0]
    assert env.mean[env.angles == 45][0] == pytest.approx(math.sqrt(2))


def test_empty_input():
    env = polar_bin([], [])
    assert env.empty.all() and (env.max == 0).all()


def test_bin_oracle_10k_points():
    rng = np.random.default_rng(4)
    ax, ay = rng.normal(0, 1.5, 10_000), rng.normal(0, 2.0, 10_000)
    t0 = time.perf_counter()
    env = polar_bin(ax, ay)
    elapsed = time.perf_counter() - t0
    want = bin_oracle(ax, ay, env.angles, 10.0)
    got = np.column_stack([env.mean, env.p75, env.p95, env.max, env.counts])
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)
    assert elapsed < 1.0


points = st.lists(st.tuples(st.floats(-8, 8), st.floats(-8, 8)), min_size=1, max_size=80)


def rotate(ax, ay, deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return c * ax - s * ay, s * ax + c * ay


@settings(max_examples=60, deadline=None)
@given(points)
def test_rotation_by_stride_shifts_bins(pts):
    # keep points away from bin boundaries so rounding cannot move them
    ax, ay = (np.array(v) for v in zip(*pts))
    r = np.hypot(ax, ay)
    theta = np.degrees(np.arctan2(ay, ax))
    d = np.abs(((theta[:, None] - center_angles(15)[None, :]) + 180) % 360 - 180)
    keep = (r > 1e-3) & (np.abs(d - 10).min(axis=1) > 1e-6)
    ax, ay = ax[keep], ay[keep]
    base = polar_bin(ax, ay)
    rot = polar_bin(*rotate(ax, ay, 15.0))
    np.testing.assert_array_equal(np.roll(base.counts, 1), rot.counts)
    np.testing.assert_allclose(np.roll(base.max, 1), rot.max, atol=1e-9)
    np.testing.assert_allclose(np.roll(base.mean, 1), rot.mean, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(points, st.floats(0.1, 20))
def test_scale_equivariance(pts, c):
    ax, ay = (np.array(v) for v in zip(*pts))
    base, scaled = polar_bin(ax, ay), polar_bin(c * ax, c * ay)
    np.testing.assert_array_equal(base.counts, scaled.counts)
    for k in ("mean", "p75", "p95", "max"):
        np.testing.assert_allclose(scaled.stat(k), c * base.stat(k), rtol=1e-9, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(points)
def test_coverage_and_partition(pts):
    ax, ay = (np.array(v) for v in zip(*pts))
    ax, ay = ax[np.hypot(ax, ay) > 0], ay[np.hypot(ax, ay) > 0]
    theta = np.degrees(np.arctan2(ay, ax))
    centers = center_angles(15)
    d = np.abs(((theta[:, None] - centers[None, :]) + 180) % 360 - 180)
    assert polar_bin(ax, ay).counts.sum() >= len(ax)
    off_boundary = np.abs(d - 7.5).min(axis=1) > 1e-9
    part = polar_bin(ax[off_boundary], ay[off_boundary], EnvelopeConfig(7.5, 15))
    assert part.counts.sum() == off_boundary.sum()


def random_matrix(rng, n=40, p=24):
    return rng.normal(size=(n, p)) @ rng.normal(size=(p, p))


def test_eigenvalues_against_jacobi():
    X = random_matrix(np.random.default_rng(1))
    res = pca_varimax(X)
    np.testing.assert_allclose(res.eigenvalues, jacobi_eigenvalues(correlation_matrix(X)), atol=1e-8)


def test_unrotated_components_orthogonal():
    res = pca_varimax(random_matrix(np.random.default_rng(2)))
    V = res.unrotated_loadings / np.sqrt(res.eigenvalues[:2])
    np.testing.assert_allclose(V.T @ V, np.eye(2), atol=1e-10)


def test_rotation_preserves_communality_variance_and_score_ss():
    rng = np.random.default_rng(3)
    for _ in range(20):
        X = random_matrix(rng)
        rot = pca_varimax(X, rotate=True)
        raw = pca_varimax(X, rotate=False)
        np.testing.assert_allclose(rot.communalities, raw.communalities, atol=1e-9)
        assert rot.variance_explained.sum() == pytest.approx(raw.variance_explained.sum(), abs=1e-9)
        np.testing.assert_allclose(np.sum(rot.scores**2, axis=1), np.sum(raw.scores**2, axis=1),
                                   atol=1e-9)
        np.testing.assert_allclose(rot.rotation.T @ rot.rotation, np.eye(2), atol=1e-12)


def test_score_variance_equals_component_share():
    X = random_matrix(np.random.default_rng(8))
    res = pca_varimax(X)
    np.testing.assert_allclose(res.scores.var(axis=0, ddof=1) / X.shape[1],
                               res.variance_explained, rtol=1e-9)


def two_factor(rng, n=60, p=24, noise=0.0):
    f = rng.normal(size=(n, 2))
    angles = np.linspace(0, np.pi, p, endpoint=False)
    W = np.column_stack([np.cos(angles), np.sin(angles)]) * 3.0
    return f @ W.T + noise * rng.normal(size=(n, p))


def test_exact_two_factor_variance_sums_to_one():
    res = pca_varimax(two_factor(np.random.default_rng(5)))
    assert res.variance_explained.sum() == pytest.approx(1.0, abs=1e-9)


def test_component_order_and_sign():
    res = pca_varimax(random_matrix(np.random.default_rng(6)))
    assert res.variance_explained[0] >= res.variance_explained[1]
    for j in range(2):
        col = res.loadings[:, j]
        assert col[np.argmax(np.abs(col))] > 0


def test_single_column():
    X = np.arange(5.0)[:, None]
    res = pca_varimax(X, n_components=1)
    assert abs(res.loadings[0, 0]) == pytest.approx(1.0)
    assert res.variance_explained[0] == pytest.approx(1.0)


def test_errors():
    with pytest.raises(TooFewSubjects):
        pca_varimax(np.ones((2, 5)))
    X = np.random.default_rng(0).normal(size=(10, 1))
    with pytest.raises(RankDeficient), pytest.warns(UserWarning):
        pca_varimax(np.column_stack([X, np.ones(10)]))
    with pytest.raises(RankDeficient):
        pca_varimax(np.column_stack([X, 2 * X]))


def test_zero_variance_columns_dropped_with_warning():
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.normal(size=(30, 4)), np.zeros(30)])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = pca_varimax(X)
    assert caught and list(res.kept) == [0, 1, 2, 3]


def test_parallel_analysis_normal_data():
    # data and replicates use independent streams; the count is stochastic
    counts = [parallel_analysis(np.random.default_rng(1000 + s).normal(size=(60, 24)), 50, seed=s)
              for s in range(20)]
    print("retained components over 20 seeds:", counts)
    assert np.median(counts) == 0


def test_parallel_analysis_two_factor():
    X = two_factor(np.random.default_rng(1), noise=0.5)
    assert parallel_analysis(X, 50, seed=1) == 2


def test_parallel_analysis_replicates_floor():
    with pytest.raises(ValueError):
        parallel_analysis(np.ones((5, 3)), 10)


def test_varimax_single_column_untouched():
    L = np.array([[0.5], [0.7]])
    out, T = varimax(L)
    np.testing.assert_array_equal(out, L)
