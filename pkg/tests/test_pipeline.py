import numpy as np
import pytest

from dpimbalance import dp_core
from dpimbalance.data import MixtureGenSpec, generate_mixture
from dpimbalance.dp_core import SmoteAdjustment
from dpimbalance.evaluation import stratified_split
from dpimbalance.models import ConfigError
from dpimbalance.pipeline import (
    MethodSpec,
    classifier_from_dict,
    classifier_to_dict,
    fit_pipeline,
    replay_receipt,
)
from dpimbalance.preprocess import ORIGINAL


@pytest.fixture(scope="module")
def split():
    return stratified_split(generate_mixture(MixtureGenSpec(n=800, seed=2)), 0.2, 0)


CASES = [
    MethodSpec("erm", trainer="erm"),
    MethodSpec("os", preprocess="oversample", trainer="erm"),
    MethodSpec("os-adj", preprocess="oversample", trainer="erm", budget_mode="adjusted"),
    MethodSpec("smote", preprocess="smote", trainer="erm"),
    MethodSpec("smote-adj", preprocess="smote", trainer="erm", budget_mode="adjusted"),
    MethodSpec("bag", trainer="bagging", params={"m": 5}),
    MethodSpec("synth", preprocess="synth", trainer="baseline"),
]


@pytest.mark.parametrize("method", CASES, ids=lambda m: m.name)
def test_receipt_matches_replay(split, method):
    train, _ = split
    fit = fit_pipeline(method, train, 1.0, 1e-5, np.random.default_rng(0))
    replay = replay_receipt(method, train, 1.0, 1e-5)
    assert fit.receipt["epsilon"] == pytest.approx(replay["epsilon"], rel=1e-12)
    assert fit.receipt["delta"] == pytest.approx(replay["delta"], rel=1e-12, abs=1e-300)


def test_adjusted_pipelines_meet_the_request(split):
    train, _ = split
    for name in ("os-adj", "smote-adj"):
        method = next(m for m in CASES if m.name == name)
        fit = fit_pipeline(method, train, 1.0, 0.0, np.random.default_rng(0))
        assert fit.receipt["epsilon"] == pytest.approx(1.0, rel=1e-12)


def test_smote_receipt_is_the_pure_adjustment(split):
    train, _ = split
    fit = fit_pipeline(MethodSpec("s", preprocess="smote", trainer="erm"), train, 0.5, 0.0, np.random.default_rng(1))
    adj = SmoteAdjustment(train.d, 5, train.n1, train.n0 - train.n1)
    assert fit.receipt["epsilon"] == dp_core.smote_adjusted_epsilon_pure(0.5, adj)


def test_training_rows_are_tagged(split):
    train, _ = split
    fit = fit_pipeline(MethodSpec("s", preprocess="smote", trainer="baseline"), train, 1.0, 0.0, np.random.default_rng(0))
    assert np.sum(fit.train.tags == ORIGINAL) == train.n
    assert fit.train.n0 == fit.train.n1


def test_serialisation_round_trip(split):
    train, test = split
    for method in (CASES[0], CASES[5]):
        clf = fit_pipeline(method, train, 1.0, 1e-5, np.random.default_rng(0)).classifier
        back = classifier_from_dict(classifier_to_dict(clf))
        np.testing.assert_array_equal(back.predict(test.X)[0], clf.predict(test.X)[0])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"preprocess": "smote", "trainer": "dpsgd"},
        {"preprocess": "synth", "trainer": "erm"},
        {"trainer": "svm"},
        {"budget_mode": "half"},
    ],
)
def test_invalid_method_specs(kwargs):
    with pytest.raises(ConfigError):
        MethodSpec("x", **kwargs)


def test_weighted_suffix():
    m = MethodSpec("x", trainer="erm-weighted")
    assert m.trainer == "erm" and m.weighted
