"""Pre-processing + trainer pipelines with budget receipts.

A pipeline is fitted on raw-scale training data. Features are mapped into an
l2 ball using only the public bounds, so the same map is applied to test
points at prediction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dp_core
from .dp_core import PrivacyBudget, SmoteAdjustment
from .models import (
    INTERCEPT_SCALE,
    BaggedModel,
    ConfigError,
    DpSgdConfig,
    ErmConfig,
    LinearModel,
    train_dpsgd,
    train_erm_objective_perturbation,
    train_logreg_baseline,
    train_private_bagging,
)
from .preprocess import (
    Dataset,
    class_weights,
    normalize_to_ball,
    oversample_deterministic,
    smote_augment,
)
from .synth import Discretizer, end_to_end_private_balance

PREPROCESSORS = ("none", "oversample", "smote", "synth")
TRAINERS = ("baseline", "erm", "dpsgd", "bagging")
PURE_TRAINERS = ("baseline", "erm")

# Shared ridge strength for all pipelines; see the decisions ledger for how it was set.
DEFAULT_LAMBDA = 1e-3


@dataclass
class MethodSpec:
    """One pipeline: a pre-processor, a trainer and their parameters.

    ``budget_mode`` only matters for oversampling/SMOTE: "unadjusted" runs
    the trainer at the requested epsilon and reports the inflated budget,
    "adjusted" shrinks the trainer's epsilon so the inflated budget equals the
    request.
    """

    name: str
    preprocess: str = "none"
    trainer: str = "erm"
    weighted: bool = False
    budget_mode: str = "unadjusted"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trainer.endswith("-weighted"):
            self.trainer = self.trainer[: -len("-weighted")]
            self.weighted = True
        if self.preprocess not in PREPROCESSORS:
            raise ConfigError(f"unknown pre-processing {self.preprocess!r}")
        if self.trainer not in TRAINERS:
            raise ConfigError(f"unknown trainer {self.trainer!r}")
        if self.budget_mode not in ("unadjusted", "adjusted"):
            raise ConfigError(f"unknown budget mode {self.budget_mode!r}")
        if self.preprocess == "smote" and self.trainer not in PURE_TRAINERS:
            raise ConfigError("SMOTE accounting covers pure epsilon-DP trainers only (baseline, erm)")
        if self.preprocess == "synth" and self.trainer != "baseline":
            raise ConfigError("synthetic-data pipelines train the non-private baseline")

    @property
    def private(self) -> bool:
        return self.trainer != "baseline" or self.preprocess == "synth"

    def param(self, key, default):
        return self.params.get(key, default)

    @classmethod
    def from_dict(cls, d: dict) -> "MethodSpec":
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "preprocess": self.preprocess,
            "trainer": self.trainer,
            "weighted": self.weighted,
            "budget_mode": self.budget_mode,
            "params": dict(self.params),
        }


@dataclass
class PipelineClassifier:
    """A trained model plus the public feature map it expects."""

    model: object
    lower: np.ndarray
    upper: np.ndarray
    radius: float

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        ds = Dataset(X, np.zeros(X.shape[0], dtype=np.int64), self.lower, self.upper)
        return normalize_to_ball(ds, self.radius).X

    def predict(self, X):
        return self.model.predict(self.transform(X))


@dataclass
class FitResult:
    classifier: PipelineClassifier
    receipt: dict
    train: Dataset


def _non_private_receipt() -> dict:
    return {"private": False, "epsilon": None, "delta": None}


def _receipt(budget: PrivacyBudget, **extra) -> dict:
    return {"private": True, "epsilon": budget.epsilon, "delta": budget.delta, **extra}


def fit_pipeline(
    method: MethodSpec,
    train: Dataset,
    epsilon: float,
    delta: float,
    rng: np.random.Generator,
) -> FitResult:
    """Pre-process ``train``, fit the trainer and account the privacy loss."""
    if train.n0 == 0 or train.n1 == 0:
        raise ValueError("training data must contain both classes")
    n1_orig = train.n1
    fit_intercept = method.param("fit_intercept", True)
    radius = INTERCEPT_SCALE if fit_intercept else 1.0
    N = method.param("N", None)
    if N is None:
        N = max(train.n0 - train.n1, 0)

    # pre-processing; factor maps trainer epsilon to the reported epsilon
    inflate = None
    extra = {}
    data = train
    if method.preprocess == "oversample":
        data = oversample_deterministic(train, N)
        rep = -(-N // n1_orig) if N else 0
        inflate = lambda b: dp_core.oversampling_adjusted_budget(b, N, n1_orig)  # noqa: E731
        shrink = rep + 1
        extra["oversample"] = {"N": N, "n1": n1_orig, "factor": shrink}
    elif method.preprocess == "smote":
        k = method.param("smote_k", 5)
        data = smote_augment(train, N, k, rng)
        adj = SmoteAdjustment(d=train.d, k=k, n1=n1_orig, N=N, gamma=method.param("gamma", 0.0))
        inflate = lambda b: PrivacyBudget(dp_core.smote_adjusted_epsilon_pure(b.epsilon, adj))  # noqa: E731
        shrink = adj.growth * adj.replication + 1.0
        extra["smote"] = {"d": adj.d, "k": k, "n1": n1_orig, "N": N, "factor": shrink}
    elif method.preprocess == "synth":
        disc = Discretizer.from_dataset(train, method.param("bins", 10))
        n_synth = method.param("n_synth", 2 * train.n0)
        n_synth += n_synth % 2
        data, spent = end_to_end_private_balance(
            train, disc, PrivacyBudget(epsilon), n_synth, method.param("mode", "conditional"), rng
        )
        extra["synth"] = {"bins": disc.bins, "N": n_synth}

    trainer_eps, trainer_delta = epsilon, delta
    if inflate is not None and method.budget_mode == "adjusted" and method.trainer != "baseline":
        trainer_eps = epsilon / shrink
        if method.preprocess == "oversample":
            trainer_delta = delta / shrink

    scaled = normalize_to_ball(data, radius)
    w = class_weights(scaled) if method.weighted else None
    lam = method.param("lam", DEFAULT_LAMBDA)

    if method.trainer == "baseline":
        model = train_logreg_baseline(scaled, w, lam, fit_intercept)
        spent_trainer = None
    elif method.trainer == "erm":
        cfg = ErmConfig(trainer_eps, lam, fit_intercept=fit_intercept)
        model, spent_trainer = train_erm_objective_perturbation(scaled, w, cfg, rng)
    elif method.trainer == "dpsgd":
        cfg = DpSgdConfig(
            epsilon=trainer_eps,
            delta=trainer_delta,
            clip_norm=method.param("clip_norm", 1.0),
            learning_rate=method.param("learning_rate", 0.5),
            expected_batch_size=method.param("batch_size", 64),
            minibatch_size=method.param("minibatch_size", 64),
            iterations=method.param("iterations", 100),
            fit_intercept=fit_intercept,
        )
        model, spent_trainer = train_dpsgd(scaled, w, cfg, rng)
    else:
        cfg = ErmConfig(trainer_eps, lam, fit_intercept=fit_intercept)
        model, spent_trainer = train_private_bagging(
            scaled,
            w,
            method.param("m", 25),
            method.param("subsample", 0.5),
            PrivacyBudget(trainer_eps, trainer_delta),
            method.param("delta_prime", trainer_delta if trainer_delta > 0 else 1e-5),
            cfg,
            rng,
        )

    if method.preprocess == "synth":
        receipt = _receipt(spent, source="synthesizer", **extra)
    elif spent_trainer is None:
        receipt = _non_private_receipt()
        receipt.update(extra)
    elif inflate is not None:
        receipt = _receipt(
            inflate(spent_trainer),
            source=method.preprocess,
            trainer_epsilon=spent_trainer.epsilon,
            trainer_delta=spent_trainer.delta,
            **extra,
        )
    else:
        receipt = _receipt(spent_trainer, source="trainer")

    clf = PipelineClassifier(model, train.lower.copy(), train.upper.copy(), radius)
    return FitResult(clf, receipt, data)


def replay_receipt(method: MethodSpec, train: Dataset, epsilon: float, delta: float) -> Optional[dict]:
    """Recompute the reported (epsilon, delta) from the accountant alone, without training."""
    if not method.private:
        return None
    N = method.param("N", None)
    if N is None:
        N = max(train.n0 - train.n1, 0)
    if method.preprocess == "synth":
        return {"epsilon": epsilon, "delta": 0.0}
    if method.preprocess == "oversample":
        shrink = (-(-N // train.n1) if N else 0) + 1
    elif method.preprocess == "smote":
        adj = SmoteAdjustment(train.d, method.param("smote_k", 5), train.n1, N, method.param("gamma", 0.0))
        shrink = adj.growth * adj.replication + 1.0
    else:
        shrink = 1.0
    adjusted = method.budget_mode == "adjusted" and method.preprocess in ("oversample", "smote")
    eps_t = epsilon / shrink if adjusted else epsilon
    delta_t = delta / shrink if adjusted and method.preprocess == "oversample" else delta

    if method.trainer == "erm":
        base = PrivacyBudget(eps_t, 0.0)
    elif method.trainer == "bagging":
        dp = method.param("delta_prime", delta_t if delta_t > 0 else 1e-5)
        per = dp_core.invert_advanced(eps_t, method.param("m", 25), dp)
        base = dp_core.compose_advanced(PrivacyBudget(per), method.param("m", 25), dp)
    else:
        return None  # DP-SGD depends on the realised number of releases
    if method.preprocess == "oversample":
        base = dp_core.oversampling_adjusted_budget(base, N, train.n1)
    elif method.preprocess == "smote":
        base = PrivacyBudget(dp_core.smote_adjusted_epsilon_pure(base.epsilon, adj))
    return base.to_dict()


def is_finite_receipt(receipt: dict) -> bool:
    return receipt.get("epsilon") is not None and math.isfinite(receipt["epsilon"])


def classifier_to_dict(clf: PipelineClassifier) -> dict:
    model = clf.model
    if isinstance(model, BaggedModel):
        body = {"type": "bagged", "members": [m.to_dict() for m in model.members]}
    else:
        body = {"type": "linear", **model.to_dict()}
    return {
        "model": body,
        "normalization": {
            "lower": clf.lower.tolist(),
            "upper": clf.upper.tolist(),
            "radius": clf.radius,
        },
    }


def classifier_from_dict(d: dict) -> PipelineClassifier:
    body, norm = d["model"], d["normalization"]

    def linear(m):
        return LinearModel(np.asarray(m["coef"], dtype=float), float(m["intercept"]), float(m.get("threshold", 0.5)))

    if body["type"] == "bagged":
        model = BaggedModel([linear(m) for m in body["members"]])
    elif body["type"] == "linear":
        model = linear(body)
    else:
        raise ValueError(f"unknown model type {body['type']!r}")
    return PipelineClassifier(
        model, np.asarray(norm["lower"], dtype=float), np.asarray(norm["upper"], dtype=float), float(norm["radius"])
    )
