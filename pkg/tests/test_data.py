import warnings

import numpy as np
import pytest

from dpimbalance.analytic import MixtureSpec
from dpimbalance.data import (
    DataDependentBoundsWarning,
    DataError,
    MixtureGenSpec,
    dataset_stats,
    generate_1d_mixture,
    generate_mixture,
    generate_mixture_counts,
    load_csv,
    save_csv,
    subsample_to_ratio,
)


def test_mixture_minority_count_concentrates():
    hits = sum(70 <= generate_mixture(MixtureGenSpec(seed=s)).n1 <= 130 for s in range(200))
    assert hits >= 190


def test_mixture_class_means():
    spec = MixtureGenSpec(n=20000, seed=1)
    ds = generate_mixture(spec)
    for c, mean in ((0, spec.mean0), (1, spec.mean1)):
        rows = ds.X[ds.y == c]
        se = np.sqrt(spec.variances / rows.shape[0])
        assert np.all(np.abs(rows.mean(axis=0) - mean) <= 3 * se)


def test_mixture_bounds_and_determinism():
    a = generate_mixture(MixtureGenSpec(seed=3))
    b = generate_mixture(MixtureGenSpec(seed=3))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_allclose(a.lower, [-12.0, -12.0])
    np.testing.assert_allclose(a.upper, [16.0, 16.0])


def test_mixture_golden_values():
    # pins numpy's PCG64 + ziggurat normal stream for seed 0
    ds = generate_mixture(MixtureGenSpec(n=3, seed=0))
    np.testing.assert_array_equal(ds.y, [0, 0, 1])
    np.testing.assert_allclose(
        ds.X,
        [[0.20980023, -1.07133875], [0.72319011, 2.60800009], [5.89416193, 2.59252953]],
        atol=1e-8,
    )


def test_mixture_spec_validation():
    with pytest.raises(ValueError):
        MixtureGenSpec(p1=1.0)
    with pytest.raises(ValueError):
        MixtureGenSpec(variances=(1.0, 0.0))


def test_1d_mixture_counts(rng):
    ds = generate_1d_mixture(MixtureSpec(0.0, 2.0, 1.0, r_star=9.0), 10**4, rng)
    assert abs(ds.n1 - 1000) <= 3 * np.sqrt(10**4 * 0.1 * 0.9)


def test_exact_counts():
    ds = generate_mixture_counts(MixtureGenSpec(mean0=(0.0,) * 6, mean1=(1.0,) * 6, variances=1.0), 10923, 260)
    stats = dataset_stats(ds)
    assert (stats["n"], stats["n0"], stats["n1"]) == (11183, 10923, 260)
    assert round(stats["r"]) == 42


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_csv_round_trip(tmp_path, rng):
    ds = generate_mixture(MixtureGenSpec(n=50, seed=2))
    bounds = {"a": [-12.0, 16.0], "b": [-12.0, 16.0]}
    save_csv(ds, tmp_path / "x.csv", ["a", "b"])
    back = load_csv(tmp_path / "x.csv", "label", bounds=bounds)
    np.testing.assert_allclose(back.X, ds.X, atol=1e-12)
    np.testing.assert_array_equal(back.y, ds.y)


def test_csv_clip_report(tmp_path):
    f = write(tmp_path / "c.csv", "a,b,label\n0.5,9,0\n-3,0.1,1\n0.2,0.2,0\n")
    ds = load_csv(f, "label", bounds={"a": [0, 1], "b": [0, 1]})
    assert ds.meta["clip_counts"] == {"a": 1, "b": 1}
    assert ds.X.max() <= 1 and ds.X.min() >= 0


def test_csv_inferred_bounds_warn(tmp_path):
    f = write(tmp_path / "c.csv", "a,label\n1,0\n2,1\n")
    with pytest.warns(DataDependentBoundsWarning):
        ds = load_csv(f, "label")
    assert ds.meta["bounds_inferred"]


def test_csv_column_order_does_not_matter(tmp_path):
    f1 = write(tmp_path / "a.csv", "a,b,label\n1,2,0\n3,4,1\n")
    f2 = write(tmp_path / "b.csv", "label,b,a\n0,2,1\n1,4,3\n")
    bounds = {"a": [0, 5], "b": [0, 5]}
    d1 = load_csv(f1, "label", bounds, features=["a", "b"])
    d2 = load_csv(f2, "label", bounds, features=["a", "b"])
    np.testing.assert_array_equal(d1.X, d2.X)
    assert load_csv(f2, "label", bounds).n == d1.n


def test_csv_string_labels_map_minority_to_one(tmp_path):
    f = write(tmp_path / "c.csv", "a,cls\n1,no\n2,no\n3,yes\n")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ds = load_csv(f, "cls")
    np.testing.assert_array_equal(ds.y, [0, 0, 1])


@pytest.mark.parametrize(
    "text, match",
    [
        ("a,label\nx,0\n1,1\n", "not numeric"),
        ("a,label\n1,\n2,1\n", "missing label"),
        ("a,label\n1,0\n2,0\n", "one class"),
        ("a,label\n1,0\n2,1\n3,2\n", "binary"),
        ("a,y\n1,0\n", "label column"),
    ],
)
def test_csv_errors(tmp_path, text, match):
    f = write(tmp_path / "bad.csv", text)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(DataError, match=match):
            load_csv(f, "label", bounds={"a": [0, 5]})


def test_subsample_to_ratio(rng):
    ds = generate_mixture_counts(MixtureGenSpec(), 5000, 500)
    out = subsample_to_ratio(ds, 42, rng, n_total=2150)
    assert out.n1 == 50 and out.n0 == 2100
