import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from dpimbalance.dp_core import PrivacyBudget
from dpimbalance.preprocess import (
    ORIGINAL,
    Dataset,
    class_weights,
    knn_indices,
    normalize_to_ball,
    oversample_deterministic,
    smote,
    smote_augment,
)

from oracles import brute_knn


def make_ds(n0, n1, d=2, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n0, d)), rng.normal(3, 1, (n1, d))])
    y = np.repeat([0, 1], [n0, n1])
    return Dataset(X, y, np.full(d, -10.0), np.full(d, 13.0))


def test_dataset_counts():
    ds = make_ds(90, 10)
    assert (ds.n, ds.d, ds.n0, ds.n1) == (100, 2, 90, 10)
    assert ds.ratio == 9.0
    assert np.all(ds.tags == ORIGINAL)


def test_dataset_rejects_bad_labels():
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), [0, 2], [0.0], [1.0])
    with pytest.raises(ValueError):
        Dataset(np.zeros((2, 1)), [0, 1], [1.0], [1.0])


def test_with_minority_positive_flips_when_needed():
    ds = make_ds(10, 90)
    flipped = ds.with_minority_positive()
    assert flipped.n1 == 10 and flipped.n0 == 90
    assert make_ds(90, 10).with_minority_positive().n1 == 10


def test_oversample_equalizes_classes():
    ds = make_ds(90, 10)
    out = oversample_deterministic(ds, ds.n0 - ds.n1)
    assert out.n0 == out.n1 == 90
    assert np.sum(out.tags == "oversample") == 80


@given(st.integers(1, 30), st.integers(0, 200))
def test_oversample_copy_counts(n1, N):
    ds = make_ds(5, n1)
    out = oversample_deterministic(ds, N)
    added = out.X[ds.n:]
    minority = ds.minority
    counts = [int(np.sum(np.all(added == row, axis=1))) for row in minority]
    assert sum(counts) == N
    assert max(counts) - min(counts) <= 1
    # the first N mod n1 minority rows take the extra copy
    assert counts == sorted(counts, reverse=True)


def test_knn_collinear_tie_break():
    pts = np.array([[0.0], [1.0], [2.0], [3.0]])
    np.testing.assert_array_equal(knn_indices(pts, 1).ravel(), [1, 0, 1, 2])


def test_knn_square_matches_oracle():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_array_equal(knn_indices(pts, 1), brute_knn(pts.tolist(), 1))


@given(
    hnp.arrays(np.float64, st.tuples(st.integers(3, 40), st.integers(1, 4)),
               elements=st.integers(-5, 5).map(float)),
    st.integers(1, 2),
)
def test_knn_matches_oracle_with_ties(points, k):
    np.testing.assert_array_equal(knn_indices(points, k), brute_knn(points.tolist(), k))


def test_knn_chunking_is_invisible(rng):
    pts = rng.normal(size=(300, 3))
    np.testing.assert_array_equal(knn_indices(pts, 4, chunk=7), knn_indices(pts, 4, chunk=1000))


def test_knn_precondition():
    with pytest.raises(ValueError):
        knn_indices(np.zeros((3, 2)), 3)


def test_smote_square_outputs_on_edges(rng):
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    out = smote(sq, 4, 1, rng)
    nbr = knn_indices(sq, 1).ravel()
    for t, p in enumerate(out):
        base = sq[t % 4]
        other = sq[nbr[t % 4]]
        assert np.all(p >= np.minimum(base, other)) and np.all(p <= np.maximum(base, other))
        # the segment between edge-adjacent corners is an edge of the square
        on_edge = np.isclose(p[0], 0) or np.isclose(p[0], 1) or np.isclose(p[1], 0) or np.isclose(p[1], 1)
        assert on_edge


@given(st.integers(3, 60), st.integers(1, 4), st.integers(0, 300), st.integers(0, 2**32 - 1))
def test_smote_interpolation_envelope(n1, d, N, seed):
    rng = np.random.default_rng(seed)
    minority = rng.normal(size=(n1, d))
    k = min(3, n1 - 1)
    out = smote(minority, N, k, np.random.default_rng(seed + 1))
    assert out.shape == (N, d)
    nbrs = knn_indices(minority, k)
    for t, p in enumerate(out):
        base = minority[t % n1]
        cands = minority[nbrs[t % n1]]
        lo = np.minimum(base, cands)
        hi = np.maximum(base, cands)
        inside = np.all((p >= lo - 1e-12) & (p <= hi + 1e-12), axis=1)
        assert inside.any()


def test_smote_precondition(rng):
    with pytest.raises(ValueError, match="n1 > k"):
        smote(np.zeros((3, 2)), 5, 3, rng)


def test_smote_augment_balances_and_tags(rng):
    ds = make_ds(50, 10)
    out = smote_augment(ds, 40, 3, rng)
    assert out.n1 == out.n0 == 50
    assert np.sum(out.tags == "smote") == 40
    assert np.all(out.tags[: ds.n] == ORIGINAL)


def test_class_weights_ratio_nine():
    w = class_weights(make_ds(90, 10))
    assert w.w_class1 == 1.0
    assert w.w_class0 == pytest.approx(1 / 9, rel=1e-15)


def test_class_weights_after_removing_one_positive():
    w = class_weights(make_ds(50, 49))
    assert w.w_class1 == 1.0
    assert w.w_class0 == pytest.approx(49 / 50, rel=1e-15)


def test_class_weights_noisy_counts_reproducible():
    ds = make_ds(90, 10)
    a = class_weights(ds, PrivacyBudget(1.0), np.random.default_rng(3))
    b = class_weights(ds, PrivacyBudget(1.0), np.random.default_rng(3))
    assert a.w_class0 == b.w_class0
    assert max(a.w_class0, a.w_class1) == 1.0


@given(st.integers(1, 6), st.floats(0.1, 2.0), st.integers(0, 1000))
def test_normalize_to_ball_bounds_norm(d, radius, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-50, 50, size=(40, d))
    ds = Dataset(X, rng.integers(0, 2, 40), np.full(d, -20.0), np.full(d, 20.0))
    out = normalize_to_ball(ds, radius)
    assert np.all(np.linalg.norm(out.X, axis=1) <= radius * (1 + 1e-12))


def test_normalize_is_rowwise():
    ds = make_ds(20, 5, d=3)
    full = normalize_to_ball(ds, 0.5).X
    part = normalize_to_ball(ds.subset(np.arange(7)), 0.5).X
    np.testing.assert_array_equal(full[:7], part)


def test_normalize_corner_maps_to_sphere():
    ds = Dataset(np.array([[13.0, 13.0], [-10.0, -10.0]]), [0, 1], [-10.0, -10.0], [13.0, 13.0])
    out = normalize_to_ball(ds, 1 / math.sqrt(2))
    assert np.linalg.norm(out.X, axis=1) == pytest.approx([1 / math.sqrt(2)] * 2)
