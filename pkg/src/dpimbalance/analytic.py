"""One-dimensional two-Gaussian warm-up: a private threshold classifier, its
error bounds, and closed-form metrics of the reweighted threshold rule."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional

import numpy as np

from .dp_core import PrivacyBudget, PrivacyError, compose_basic, gaussian_noise_sigma
from .preprocess import Dataset

# Phi uses erfc; Phi^{-1} is Wichura's AS241 rational approximation (both via
# the standard library, accurate to ~1e-15).
_STD_NORMAL = NormalDist()


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_ppf(p: float) -> float:
    return _STD_NORMAL.inv_cdf(p)


@dataclass(frozen=True)
class MixtureSpec:
    """Class-conditional N(mu_c, sigma^2) with population ratio r* = P(y=0)/P(y=1).

    ``B`` bounds the absolute means and ``R`` is the clipping radius used by
    the private mean estimator.
    """

    mu0: float
    mu1: float
    sigma: float
    r_star: float = 1.0
    B: Optional[float] = None
    R: Optional[float] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.r_star < 1:
            raise ValueError("r* must be at least 1")
        if self.B is not None and max(abs(self.mu0), abs(self.mu1)) > self.B:
            raise ValueError("|mu| exceeds the public bound B")

    @property
    def separation(self) -> float:
        """``(mu1 - mu0) / sigma``."""
        return (self.mu1 - self.mu0) / self.sigma

    @property
    def p1(self) -> float:
        return 1.0 / (1.0 + self.r_star)

    def theta(self, gamma: float = 0.5) -> float:
        return gamma * self.mu1 + (1.0 - gamma) * self.mu0

    def clip_radius_ok(self, n: int, beta: float) -> bool:
        """Whether ``R > B + sigma sqrt(2 ln(4 n / beta))``."""
        if self.R is None or self.B is None:
            raise ValueError("spec needs both B and R for the radius check")
        return self.R > self.B + self.sigma * math.sqrt(2.0 * math.log(4.0 * n / beta))


@dataclass(frozen=True)
class ThresholdClassifier:
    theta: float
    gamma: float = 0.5

    def predict(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) >= self.theta).astype(np.int64)


def private_mean(
    samples,
    R: float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
    add_noise: bool = True,
) -> float:
    """Gaussian-mechanism mean of samples clipped to [-R, R] (sensitivity 2R/n)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot estimate the mean of an empty sample")
    sigma = gaussian_noise_sigma(2.0 * R / x.size, budget)
    clipped = np.clip(x, -R, R).mean()
    if not add_noise:
        return float(clipped)
    return float(clipped + rng.normal(0.0, sigma))


def private_boc(
    ds: Dataset,
    spec: MixtureSpec,
    budget: PrivacyBudget,
    rng: np.random.Generator,
    add_noise: bool = True,
) -> tuple[ThresholdClassifier, PrivacyBudget]:
    """Private midpoint-of-means threshold; spends twice the per-mean budget."""
    if spec.R is None:
        raise ValueError("spec.R (clipping radius) is required")
    if not budget.epsilon < 1:
        raise PrivacyError("each private mean needs epsilon < 1")
    x = ds.X[:, 0]
    if ds.n0 == 0 or ds.n1 == 0:
        raise ValueError("both classes need at least one sample")
    mu0 = private_mean(x[ds.y == 0], spec.R, budget, rng, add_noise)
    mu1 = private_mean(x[ds.y == 1], spec.R, budget, rng, add_noise)
    return ThresholdClassifier(0.5 * (mu0 + mu1)), compose_basic([budget, budget])


def boc_error_bound(
    spec: MixtureSpec, n0: int, r: float, budget: PrivacyBudget, beta: float
) -> float:
    """High-probability upper bound on ``|theta_hat - theta|`` for the private threshold.

    ``2 sqrt(ln(4/beta)) sqrt(sigma^2 (1+r)/n0 + 2 R^2 ln(1.25/delta) (1+r^2) / (n0^2 eps^2))``
    with ``r = n0 / n1`` the sample ratio.
    """
    if spec.R is None:
        raise ValueError("spec.R is required")
    eps, delta = budget.epsilon, budget.delta
    var = spec.sigma**2 * (1.0 + r) / n0 + 2.0 * spec.R**2 * math.log(1.25 / delta) * (
        1.0 + r * r
    ) / (n0 * n0 * eps * eps)
    return 2.0 * math.sqrt(math.log(4.0 / beta)) * math.sqrt(var)


def mle_lower_bound(spec: MixtureSpec, n0: int, beta: float, r: Optional[float] = None) -> float:
    """``sigma sqrt((1 + r) / n0) Phi^{-1}(1 - beta / 2)``, as printed.

    ``r`` defaults to the population ratio of ``spec``.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    r = spec.r_star if r is None else r
    return spec.sigma * math.sqrt((1.0 + r) / n0) * normal_ppf(1.0 - beta / 2.0)


@dataclass(frozen=True)
class WarmupMetrics:
    recall: float
    precision: float
    balanced_accuracy: float
    f1: float

    def as_dict(self) -> dict:
        return {
            "recall": self.recall,
            "precision": self.precision,
            "balanced_accuracy": self.balanced_accuracy,
            "f1": self.f1,
        }


def analytic_metrics(spec: MixtureSpec, gamma: float) -> WarmupMetrics:
    """The closed forms of the reweighted threshold rule, exactly as published.

    With ``a = Phi((1-gamma) Delta)`` and ``b = Phi(gamma Delta)``:
    Re = (1+r*) a, Pre = a / (a + (1+r*)(1-b)), BA = (a+b)/2,
    F1 = a / (a + (1-b)/2). Only BA coincides with the population metric;
    see :func:`population_metrics` for the exact confusion-matrix versions.
    """
    a = normal_cdf((1.0 - gamma) * spec.separation)
    b = normal_cdf(gamma * spec.separation)
    rs = spec.r_star
    return WarmupMetrics(
        recall=(1.0 + rs) * a,
        precision=a / (a + (1.0 + rs) * (1.0 - b)),
        balanced_accuracy=0.5 * (a + b),
        f1=a / (a + 0.5 * (1.0 - b)),
    )


def population_metrics(spec: MixtureSpec, gamma: float) -> dict:
    """Exact population metrics of the rule ``x >= theta_gamma``."""
    tpr = normal_cdf((1.0 - gamma) * spec.separation)
    tnr = normal_cdf(gamma * spec.separation)
    p1, p0 = spec.p1, 1.0 - spec.p1
    tp, fn, fp = p1 * tpr, p1 * (1.0 - tpr), p0 * (1.0 - tnr)
    return {
        "tpr": tpr,
        "tnr": tnr,
        "recall": tpr,
        "precision": tp / (tp + fp) if tp + fp > 0 else 0.0,
        "balanced_accuracy": 0.5 * (tpr + tnr),
        "f1": 2 * tp / (2 * tp + fp + fn),
    }


def simulate_metrics(
    spec: MixtureSpec, gamma: float, n: int, rng: np.random.Generator
) -> dict:
    """Monte Carlo confusion-matrix metrics of the rule ``x >= theta_gamma``.

    Rates that need an absent class are ``nan`` and listed under
    ``undefined``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    y = (rng.random(n) < spec.p1).astype(np.int64)
    x = np.where(y == 1, spec.mu1, spec.mu0) + spec.sigma * rng.standard_normal(n)
    pred = x >= spec.theta(gamma)
    tp = int(np.sum(pred & (y == 1)))
    fn = int(np.sum(~pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    tn = int(np.sum(~pred & (y == 0)))
    undefined = []
    tpr = tp / (tp + fn) if tp + fn else math.nan
    tnr = tn / (tn + fp) if tn + fp else math.nan
    if math.isnan(tpr):
        undefined.append("tpr")
    if math.isnan(tnr):
        undefined.append("tnr")
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
    return {
        "n": n,
        "tp": tp,
        "fn": fn,
        "fp": fp,
        "tn": tn,
        "tpr": tpr,
        "tnr": tnr,
        "recall": tpr,
        "precision": precision,
        "balanced_accuracy": 0.5 * (tpr + tnr),
        "f1": f1,
        "undefined": undefined,
    }
