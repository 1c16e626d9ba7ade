import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpimbalance.evaluation import (
    METRICS,
    ExperimentConfig,
    MetricConventionWarning,
    MissingCellWarning,
    average_ranks,
    boundary_grid,
    compute_metrics,
    grid_to_csv,
    rank_auc,
    run_experiment,
    stratified_split,
)
from dpimbalance.models import LinearModel
from dpimbalance.preprocess import Dataset

from oracles import all_pairs_auc, confusion, mcc


@given(st.integers(2, 300), st.integers(0, 2**31), st.booleans())
def test_rank_auc_matches_all_pairs(n, seed, coarse):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    scores = rng.integers(0, 5, n).astype(float) if coarse else rng.random(n)
    assert rank_auc(scores, labels) == pytest.approx(all_pairs_auc(scores, labels), abs=1e-12)


def test_random_scores_auc_near_half(rng):
    labels = np.repeat([0, 1], 50000)
    assert abs(rank_auc(rng.random(10**5), labels) - 0.5) < 0.01


def test_perfect_classifier():
    m = compute_metrics([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert (m.auc, m.f1, m.g_mean, m.mcc) == (1.0, 1.0, 1.0, 1.0)


def test_all_negative_classifier_on_r9():
    labels = np.repeat([0, 1], [90, 10])
    with pytest.warns(MetricConventionWarning):
        m = compute_metrics(np.zeros(100), labels)
    assert m.recall == 0 and m.worst_class_accuracy == 0
    assert m.balanced_accuracy == 0.5 and m.accuracy == 0.9
    assert m.precision == 0 and m.mcc == 0


def test_single_class_flags_auc():
    m = compute_metrics([0.2, 0.7], [1, 1])
    assert not m.auc_defined and math.isnan(m.auc)
    assert m.recall == 0.5


@given(st.integers(1, 200), st.integers(0, 2**31))
def test_metrics_consistent_with_confusion(n, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    scores = rng.random(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = compute_metrics(scores, labels)
    tp, fp, tn, fn = confusion(scores >= 0.5, labels)
    assert (m.tp, m.fp, m.tn, m.fn) == (tp, fp, tn, fn)
    assert m.mcc == pytest.approx(mcc(tp, fp, tn, fn))
    assert m.f1 == (2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0)
    assert m.g_mean == pytest.approx(math.sqrt(m.recall * (tn / (tn + fp) if tn + fp else 0.0)))
    assert m.balanced_accuracy == m.macro_avg_accuracy
    assert m.worst_class_accuracy <= m.balanced_accuracy


def test_compute_metrics_validates():
    with pytest.raises(ValueError):
        compute_metrics([], [])
    with pytest.raises(ValueError):
        compute_metrics([0.5], [2])


def _ds(n0, n1):
    X = np.arange(n0 + n1, dtype=float)[:, None]
    return Dataset(X, np.repeat([0, 1], [n0, n1]), [0.0], [float(n0 + n1)])


@given(st.integers(2, 300), st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 10**6))
def test_stratified_split_properties(n0, n1, frac, seed):
    ds = _ds(n0, n1)
    tr, te = stratified_split(ds, frac, seed)
    assert tr.n + te.n == ds.n
    assert set(tr.X[:, 0]).isdisjoint(te.X[:, 0])
    for c, nc in ((0, n0), (1, n1)):
        n_test = int(np.sum(te.y == c))
        assert 1 <= n_test <= nc - 1
        assert abs(n_test - frac * nc) <= 1


def test_stratified_split_is_deterministic():
    ds = _ds(50, 10)
    a, _ = stratified_split(ds, 0.2, 7)
    b, _ = stratified_split(ds, 0.2, 7)
    np.testing.assert_array_equal(a.X, b.X)


def test_stratified_split_small_class():
    with pytest.raises(ValueError):
        stratified_split(_ds(10, 1), 0.2, 0)


def test_ranks_dominating_method():
    table = {("d", e): {"a": {"auc": 0.9}, "b": {"auc": 0.5}, "c": {"auc": 0.1}} for e in (0.1, 1.0)}
    ranks, skipped = average_ranks(table, ["auc"])
    assert ranks["auc"] == {"a": 1.0, "b": 2.0, "c": 3.0}
    assert skipped == 0


def test_ranks_ties():
    table = {("d", 1.0): {"a": {"f1": 0.3}, "b": {"f1": 0.3}}}
    ranks, _ = average_ranks(table, ["f1"])
    assert ranks["f1"] == {"a": 1.5, "b": 1.5}


def test_ranks_skip_missing_cells():
    table = {
        ("d", 1.0): {"a": {"f1": 0.3}, "b": {"f1": 0.1}},
        ("d", 5.0): {"a": {"f1": float("nan")}, "b": {"f1": 0.2}},
    }
    with pytest.warns(MissingCellWarning):
        ranks, skipped = average_ranks(table, ["f1"])
    assert skipped == 1 and ranks["f1"]["a"] == 1.0


def test_ranks_need_two_methods():
    with pytest.raises(ValueError):
        average_ranks({("d", 1.0): {"a": {"f1": 0.3}}}, ["f1"])


def test_boundary_grid_line():
    model = LinearModel(np.array([1.0, -1.0]), 0.0)
    grid = boundary_grid(model, (-1, 1), (-1, 1), 21)
    assert grid.shape == (441, 4)
    step = 0.1
    for x, y, s, lab in grid:
        if abs(x - y) > step:
            assert lab == (1.0 if x > y else 0.0)
    # y varies slowest
    assert grid[1, 1] == grid[0, 1] and grid[1, 0] > grid[0, 0]


def test_boundary_grid_degenerate_cases():
    assert boundary_grid(LinearModel(np.array([1.0, 1.0])), (0, 1), (0, 1), 1).shape == (1, 4)
    flat = boundary_grid(LinearModel(np.zeros(2), -1.0), (0, 1), (0, 1), (4, 3))
    assert np.all(flat[:, 3] == 0) and flat.shape == (12, 4)
    with pytest.raises(ValueError):
        boundary_grid(LinearModel(np.zeros(3)), (0, 1), (0, 1), 3)
    assert grid_to_csv(flat).splitlines()[0] == "x,y,score,label"


SMALL = dict(
    dataset={"kind": "mixture", "n": 600, "seed": 1},
    methods=[
        {"name": "LR", "trainer": "baseline"},
        {"name": "ERM-w", "trainer": "erm-weighted"},
        {"name": "SMOTE", "preprocess": "smote", "trainer": "erm", "budget_mode": "unadjusted"},
        {"name": "Synth", "preprocess": "synth", "trainer": "baseline"},
    ],
    epsilons=[0.5, 1.0],
    seeds=2,
)


def test_run_experiment_grid_and_determinism():
    a = run_experiment(ExperimentConfig(**SMALL))
    b = run_experiment(ExperimentConfig(**SMALL, workers=3))
    assert len(a.cells) == 4 * 2 * 2
    assert a.to_csv() == b.to_csv()


def test_run_experiment_receipts():
    res = run_experiment(ExperimentConfig(**SMALL))
    for cell in res.cells:
        if cell.method == "Synth":
            assert cell.receipt["epsilon"] == cell.epsilon
        elif cell.method == "SMOTE":
            factor = cell.receipt["smote"]["factor"]
            assert cell.receipt["trainer_epsilon"] == cell.epsilon
            assert cell.receipt["epsilon"] == pytest.approx(cell.epsilon * factor, rel=1e-15)
        elif cell.method == "LR":
            assert not cell.receipt["private"]


def test_summary_has_all_metrics():
    res = run_experiment(ExperimentConfig(**SMALL))
    row = res.summary()[0]
    assert set(METRICS) <= set(row)
    ranks, _ = average_ranks(res.rank_table())
    assert set(ranks) == set(METRICS)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(**{**SMALL, "seeds": 0})
    with pytest.raises(ValueError):
        ExperimentConfig(**{**SMALL, "test_fraction": 1.0})
    with pytest.raises(ValueError):
        ExperimentConfig(**{**SMALL, "methods": [{"name": "a"}, {"name": "a"}]})
