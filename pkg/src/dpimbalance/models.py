"""Linear classifiers: a non-private weighted logistic baseline, weighted
objective-perturbation ERM, weighted DP-SGD and a private bagging ensemble."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dp_core import (
    PrivacyBudget,
    PrivacyError,
    clip_rows,
    compose_advanced,
    gaussian_noise_sigma,
    invert_advanced,
)
from .preprocess import ClassWeights, Dataset

log = logging.getLogger(__name__)

# Intercept coordinate value; features are kept inside the ball of this radius
# so that the augmented rows have norm <= 1.
INTERCEPT_SCALE = 1.0 / math.sqrt(2.0)
LOGISTIC_CURVATURE = 0.25


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, grad_norm: float):
        super().__init__(f"{message} (last gradient norm {grad_norm:.3e})")
        self.grad_norm = grad_norm


class ConfigError(ValueError):
    pass


@dataclass
class LinearModel:
    """Logistic model: ``predict`` gives sigmoid(x @ coef + intercept) and the thresholded label."""

    coef: np.ndarray
    intercept: float = 0.0
    threshold: float = 0.5
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)
        if not np.all(np.isfinite(self.coef)) or not math.isfinite(self.intercept):
            raise ValueError("model parameters must be finite")

    @property
    def d(self) -> int:
        return self.coef.shape[0]

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        probs = sigmoid(self.decision_function(X))
        return probs, (probs >= self.threshold).astype(np.int64)

    def decision_function(self, X) -> np.ndarray:
        """Margins ``X @ coef + intercept``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValueError(f"expected {self.d} feature columns, got shape {X.shape}")
        return X @ self.coef + self.intercept

    def to_dict(self) -> dict:
        return {
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "threshold": self.threshold,
        }


@dataclass
class BaggedModel:
    """Majority vote of linear members; a tied vote predicts 0.

    The ensemble score is ``(votes_for_1 + p / 2) / (m + 1)`` with ``p`` the
    mean member probability. It lies in [0, 1) and ``score >= 0.5`` exactly
    when the vote says 1, so the shared 0.5 threshold applies.
    """

    members: list

    @property
    def d(self) -> int:
        return self.members[0].d

    def predict(self, X) -> tuple[np.ndarray, np.ndarray]:
        probs, votes = [], []
        for m in self.members:
            s, lab = m.predict(X)
            probs.append(s)
            votes.append(lab)
        m = len(self.members)
        ones = np.asarray(votes).sum(axis=0)
        scores = (ones + 0.5 * np.mean(probs, axis=0)) / (m + 1)
        return scores, (2 * ones > m).astype(np.int64)


def predict(model, X) -> tuple[np.ndarray, np.ndarray]:
    """Scores and 0/1 labels for ``X``."""
    return model.predict(X)


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# --------------------------------------------------------------------------
# weighted logistic objective


def logistic_loss(y, eta):
    """``ln(1 + exp(-s eta))`` with ``s = 2y - 1``."""
    s = 2.0 * np.asarray(y) - 1.0
    return np.logaddexp(0.0, -s * eta)


def logistic_dloss(y, eta):
    """Derivative of :func:`logistic_loss` in eta; bounded by 1 in absolute value."""
    s = 2.0 * np.asarray(y) - 1.0
    return -s * sigmoid(-s * eta)


def design_matrix(X: np.ndarray, fit_intercept: bool) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if not fit_intercept:
        return X
    return np.hstack([X, np.full((X.shape[0], 1), INTERCEPT_SCALE)])


def _model_from_beta(beta: np.ndarray, fit_intercept: bool, info: dict) -> LinearModel:
    if fit_intercept:
        return LinearModel(beta[:-1].copy(), float(beta[-1] * INTERCEPT_SCALE), info=info)
    return LinearModel(beta.copy(), 0.0, info=info)


@dataclass
class WeightedLogisticObjective:
    """``(1/n) sum w_i l(y_i, x_i.beta) + (reg/2)|beta|^2 + (1/n) b.beta``."""

    A: np.ndarray
    y: np.ndarray
    w: np.ndarray
    reg: float
    b: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def value(self, beta):
        eta = self.A @ beta
        v = np.dot(self.w, logistic_loss(self.y, eta)) / self.n + 0.5 * self.reg * beta @ beta
        if self.b is not None:
            v += self.b @ beta / self.n
        return v

    def gradient(self, beta):
        eta = self.A @ beta
        g = self.A.T @ (self.w * logistic_dloss(self.y, eta)) / self.n + self.reg * beta
        if self.b is not None:
            g = g + self.b / self.n
        return g

    def hessian(self, beta):
        p = sigmoid(self.A @ beta)
        curv = self.w * p * (1.0 - p) / self.n
        H = (self.A * curv[:, None]).T @ self.A
        H[np.diag_indices_from(H)] += self.reg
        return H


def minimize_objective(
    obj: WeightedLogisticObjective, tol: float = 1e-8, max_iter: int = 200, polish: int = 3
):
    """Damped Newton with backtracking line search.

    The objective is ``reg``-strongly convex, so the Hessian is always
    positive definite. Returns ``(beta, grad_norm, iterations)``.
    """
    beta = np.zeros(obj.A.shape[1])
    f = obj.value(beta)
    g = obj.gradient(beta)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > tol and it < max_iter:
        it += 1
        step = np.linalg.solve(obj.hessian(beta), -g)
        slope = g @ step
        t = 1.0
        cand = beta + step
        f_cand = obj.value(cand)
        g_cand = obj.gradient(cand)
        # close to the optimum f is flat to rounding; a full Newton step that
        # shrinks the gradient is accepted without the Armijo test
        if np.linalg.norm(g_cand) > 0.5 * gnorm:
            while f_cand > f + 1e-4 * t * slope and t > 1e-10:
                t *= 0.5
                cand = beta + t * step
                f_cand = obj.value(cand)
            g_cand = obj.gradient(cand)
        beta, f, g = cand, f_cand, g_cand
        gnorm = float(np.linalg.norm(g))
    if gnorm > tol:
        raise ConvergenceError(f"solver stopped after {it} iterations", gnorm)
    # polish: full Newton steps while they still shrink the gradient
    for _ in range(polish):
        cand = beta + np.linalg.solve(obj.hessian(beta), -g)
        g_cand = obj.gradient(cand)
        if not np.linalg.norm(g_cand) < gnorm:
            break
        beta, g, gnorm = cand, g_cand, float(np.linalg.norm(g_cand))
        it += 1
    return beta, gnorm, it


def _weights_vector(ds: Dataset, w: Optional[ClassWeights]) -> np.ndarray:
    if w is None:
        return np.ones(ds.n)
    vec = np.asarray(w.w, dtype=float)
    if vec.shape[0] != ds.n:
        vec = w.for_labels(ds.y)
    if np.any(vec < 0) or np.any(vec > 1):
        raise ValueError("sample weights must lie in [0, 1]")
    return vec


def _check_ball(A: np.ndarray, radius: float = 1.0) -> None:
    worst = float(np.max(np.linalg.norm(A, axis=1), initial=0.0))
    if worst > radius * (1 + 1e-12):
        raise ValueError(
            f"rows must lie in the unit ball (max norm {worst:.6g}); apply bound_features first"
        )


# --------------------------------------------------------------------------
# trainers


def train_logreg_baseline(
    ds: Dataset,
    w: Optional[ClassWeights] = None,
    lam: float = 1e-2,
    fit_intercept: bool = True,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> LinearModel:
    """Non-private (weighted) L2-regularised logistic regression."""
    A = design_matrix(ds.X, fit_intercept)
    obj = WeightedLogisticObjective(A, ds.y, _weights_vector(ds, w), lam)
    beta, gnorm, it = minimize_objective(obj, tol, max_iter)
    return _model_from_beta(beta, fit_intercept, {"grad_norm": gnorm, "iterations": it})


@dataclass
class ErmConfig:
    epsilon: float
    lam: float = 1e-2
    c: float = LOGISTIC_CURVATURE
    tol: float = 1e-8
    max_iter: int = 200
    fit_intercept: bool = True

    def __post_init__(self):
        if not self.epsilon > 0 or not self.lam > 0 or not self.c > 0:
            raise ConfigError("epsilon, lambda and c must be positive")


def sample_objective_noise(d: int, eps_prime: float, rng: np.random.Generator) -> np.ndarray:
    """Draw b with density proportional to ``exp(-eps' |b| / 2)``.

    The direction is uniform on the sphere and the norm is Gamma(d, 2/eps').
    """
    if not eps_prime > 0:
        raise PrivacyError("eps' must be positive")
    direction = rng.standard_normal(d)
    nrm = np.linalg.norm(direction)
    while nrm == 0:
        direction = rng.standard_normal(d)
        nrm = np.linalg.norm(direction)
    return direction / nrm * rng.gamma(shape=d, scale=2.0 / eps_prime)


def objective_perturbation_params(n: int, cfg: ErmConfig) -> tuple[float, float]:
    """Return ``(eps', Delta)`` for the given sample size."""
    x = cfg.c / (n * cfg.lam)
    eps_prime = cfg.epsilon - math.log1p(2.0 * x + x * x)
    if eps_prime > 0:
        return eps_prime, 0.0
    delta_reg = cfg.c / (n * math.expm1(cfg.epsilon / 4.0)) - cfg.lam
    if delta_reg <= 0:
        raise ConfigError(
            f"lambda={cfg.lam} leaves no valid extra regulariser for epsilon={cfg.epsilon}"
        )
    return cfg.epsilon / 2.0, delta_reg


def train_erm_objective_perturbation(
    ds: Dataset,
    w: Optional[ClassWeights],
    cfg: ErmConfig,
    rng: np.random.Generator,
) -> tuple[LinearModel, PrivacyBudget]:
    """Weighted private ERM by objective perturbation; pure epsilon-DP.

    Requires every row of the design matrix (intercept column included) to
    have norm at most 1 and every weight in [0, 1].
    """
    A = design_matrix(ds.X, cfg.fit_intercept)
    _check_ball(A)
    wv = _weights_vector(ds, w)
    n = ds.n
    eps_prime, delta_reg = objective_perturbation_params(n, cfg)
    b = sample_objective_noise(A.shape[1], eps_prime, rng)
    obj = WeightedLogisticObjective(A, ds.y, wv, cfg.lam + delta_reg, b)
    beta, gnorm, it = minimize_objective(obj, cfg.tol, cfg.max_iter)
    info = {
        "eps_prime": eps_prime,
        "delta_reg": delta_reg,
        "b": b,
        "beta": beta,
        "grad_norm": gnorm,
        "iterations": it,
    }
    return _model_from_beta(beta, cfg.fit_intercept, info), PrivacyBudget(cfg.epsilon, 0.0)


# --------------------------------------------------------------------------
# DP-SGD


@dataclass
class DpSgdConfig:
    """Weighted DP-SGD settings.

    ``noise_multiplier`` overrides the accountant-derived sigma; set it to 0
    only for test runs (the reported epsilon is then infinite). ``policy``
    decides what happens when the planned number of noisy releases would be
    exceeded: "truncate" stops training early, "error" raises.
    """

    epsilon: float = 1.0
    delta: float = 1e-5
    delta_prime: Optional[float] = None
    clip_norm: float = 1.0
    learning_rate: float = 0.5
    expected_batch_size: int = 64
    minibatch_size: int = 64
    iterations: int = 100
    fit_intercept: bool = True
    noise_multiplier: Optional[float] = None
    policy: str = "truncate"

    def __post_init__(self):
        if not self.clip_norm > 0:
            raise ConfigError("clip norm must be positive")
        if self.expected_batch_size < 1 or self.minibatch_size < 1 or self.iterations < 1:
            raise ConfigError("batch sizes and iterations must be positive")
        if self.policy not in ("truncate", "error"):
            raise ConfigError(f"unknown budget policy {self.policy!r}")

    @property
    def resolved_delta_prime(self) -> float:
        return self.delta_prime if self.delta_prime is not None else self.delta / 2.0

    def planned_releases(self) -> int:
        return self.iterations * max(1, math.ceil(self.expected_batch_size / self.minibatch_size))


class BudgetError(PrivacyError):
    pass


def dpsgd_step_budget(cfg: DpSgdConfig) -> tuple[PrivacyBudget, int]:
    """Per-release Gaussian budget such that advanced composition meets the target."""
    m = cfg.planned_releases()
    dp = cfg.resolved_delta_prime
    if not 0 < dp < cfg.delta:
        raise ConfigError("need 0 < delta' < delta")
    step_delta = (cfg.delta - dp) / m
    step_eps = invert_advanced(cfg.epsilon, m, dp)
    if step_eps >= 1:
        raise ConfigError(f"per-step epsilon {step_eps:.4g} >= 1; the Gaussian mechanism bound fails")
    return PrivacyBudget(step_eps, step_delta), m


def _poisson_minibatches(n: int, q: float, B: int, rng: np.random.Generator):
    batch = np.flatnonzero(rng.random(n) < q)
    return [batch[i : i + B] for i in range(0, batch.size, B)]


def train_dpsgd(
    ds: Dataset,
    w: Optional[ClassWeights],
    cfg: DpSgdConfig,
    rng: np.random.Generator,
    on_step: Optional[Callable[[int, np.ndarray], None]] = None,
) -> tuple[LinearModel, PrivacyBudget]:
    """Weighted DP-SGD for a logistic model.

    Each outer iteration Poisson-samples a batch (rate L/n), splits it into
    minibatches of size B and, per minibatch, clips the weighted per-sample
    gradients ``w_i (p_i - y_i) x_i`` to norm C, adds ``N(0, sigma^2 C^2 I)``
    to their sum and steps by ``lr * sum / B``. ``on_step`` receives the
    post-clip norms of every minibatch.
    """
    A = design_matrix(ds.X, cfg.fit_intercept)
    wv = _weights_vector(ds, w)
    n, p = A.shape
    q = min(1.0, cfg.expected_batch_size / n)
    C, B = cfg.clip_norm, cfg.minibatch_size

    if cfg.noise_multiplier is None:
        step_budget, planned = dpsgd_step_budget(cfg)
        sigma = gaussian_noise_sigma(1.0, step_budget)
    else:
        if cfg.noise_multiplier < 0:
            raise ConfigError("noise multiplier must be non-negative")
        step_budget, planned, sigma = None, None, cfg.noise_multiplier

    theta = np.zeros(p)
    releases = 0
    stopped = False
    for t in range(cfg.iterations):
        for mb in _poisson_minibatches(n, q, B, rng):
            if planned is not None and releases >= planned:
                if cfg.policy == "error":
                    raise BudgetError(f"more than the {planned} planned noisy releases required")
                stopped = True
                break
            Ab = A[mb]
            resid = wv[mb] * (sigmoid(Ab @ theta) - ds.y[mb])
            G = clip_rows(resid[:, None] * Ab, C)
            norms = np.linalg.norm(G, axis=1)
            if np.any(norms > C):
                raise AssertionError("clipped gradient exceeds the clipping norm")
            if on_step is not None:
                on_step(releases, norms)
            total = G.sum(axis=0)
            if sigma > 0:
                total = total + rng.normal(0.0, sigma * C, size=p)
            theta = theta - cfg.learning_rate * (total / B)
            releases += 1
        if stopped:
            log.info("DP-SGD truncated at iteration %d after %d releases", t, releases)
            break

    if step_budget is None:
        spent = PrivacyBudget(math.inf, 0.0)
    elif releases == 0:
        spent = PrivacyBudget(0.0, 0.0)
    else:
        spent = compose_advanced(step_budget, releases, cfg.resolved_delta_prime)
    info = {"sigma": sigma, "releases": releases, "truncated": stopped}
    return _model_from_beta(theta, cfg.fit_intercept, info), spent


def train_plain_sgd(
    ds: Dataset,
    w: Optional[ClassWeights],
    cfg: DpSgdConfig,
    rng: np.random.Generator,
) -> LinearModel:
    """The same minibatch SGD loop without clipping or noise."""
    A = design_matrix(ds.X, cfg.fit_intercept)
    wv = _weights_vector(ds, w)
    n = A.shape[0]
    q = min(1.0, cfg.expected_batch_size / n)
    theta = np.zeros(A.shape[1])
    for _ in range(cfg.iterations):
        for mb in _poisson_minibatches(n, q, cfg.minibatch_size, rng):
            Ab = A[mb]
            G = (wv[mb] * (sigmoid(Ab @ theta) - ds.y[mb]))[:, None] * Ab
            theta = theta - cfg.learning_rate * (G.sum(axis=0) / cfg.minibatch_size)
    return _model_from_beta(theta, cfg.fit_intercept, {})


# --------------------------------------------------------------------------
# bagging


def train_private_bagging(
    ds: Dataset,
    w: Optional[ClassWeights],
    m: int,
    subsample: float,
    total_budget: PrivacyBudget,
    delta_prime: float,
    cfg: ErmConfig,
    rng: np.random.Generator,
) -> tuple[BaggedModel, PrivacyBudget]:
    """Majority vote of m objective-perturbation learners on random subsamples.

    The per-learner epsilon is the largest value whose m-fold advanced
    composition stays within ``total_budget.epsilon``.
    """
    if m < 1:
        raise ConfigError("m must be positive")
    if not 0 < subsample <= 1:
        raise ConfigError("subsample fraction must lie in (0, 1]")
    if total_budget.delta and delta_prime > total_budget.delta:
        raise ConfigError("delta' exceeds the total delta")
    per_eps = invert_advanced(total_budget.epsilon, m, delta_prime)
    learner_cfg = ErmConfig(
        per_eps, cfg.lam, cfg.c, cfg.tol, cfg.max_iter, cfg.fit_intercept
    )
    size = max(2, int(round(subsample * ds.n)))
    wv = _weights_vector(ds, w)
    members = []
    for child in rng.spawn(m):
        idx = np.sort(child.choice(ds.n, size=size, replace=False))
        sub = ds.subset(idx)
        cw = (w.w_class0, w.w_class1) if w is not None else (1.0, 1.0)
        sub_w = ClassWeights(wv[idx], *cw)
        model, _ = train_erm_objective_perturbation(sub, sub_w, learner_cfg, child)
        members.append(model)
    spent = compose_advanced(PrivacyBudget(per_eps, 0.0), m, delta_prime)
    return BaggedModel(members), spent

