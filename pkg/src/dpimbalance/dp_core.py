"""Noise mechanisms, clipping, and privacy-loss accounting.

All budget arithmetic is done in float64. Results are only rounded when
rendered (see :meth:`PrivacyBudget.display`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

# Exponents of the asymptotic kissing-number bounds
# k 2^{0.2075 d} <= l(d, k) <= k 2^{0.4042 d} (Wyner; Kabatiansky-Levenshtein).
KISSING_LOWER_EXPONENT = 0.2075
KISSING_UPPER_EXPONENT = 0.4042

# Known exact kissing numbers.
KISSING_NUMBERS = {1: 2, 2: 6, 3: 12, 4: 24, 8: 240, 24: 196560}


class PrivacyError(ValueError):
    """Invalid privacy parameter or an infeasible budget request."""


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair.

    ``epsilon`` may be ``math.inf`` to mark a noise-free test run; zero is
    allowed only as the degenerate output of composing zero-loss mechanisms.
    """

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if math.isnan(self.epsilon) or self.epsilon < 0:
            raise PrivacyError(f"epsilon must be non-negative, got {self.epsilon}")
        if not (0.0 <= self.delta < 1.0):
            raise PrivacyError(f"delta must lie in [0, 1), got {self.delta}")

    def __add__(self, other: "PrivacyBudget") -> "PrivacyBudget":
        if not isinstance(other, PrivacyBudget):
            return NotImplemented
        return PrivacyBudget(self.epsilon + other.epsilon, self.delta + other.delta)

    @property
    def is_pure(self) -> bool:
        return self.delta == 0.0

    def display(self) -> str:
        return f"(eps={self.epsilon:.6g}, delta={self.delta:.6g})"

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "delta": self.delta}


@dataclass(frozen=True)
class SmoteAdjustment:
    """Parameters that determine how SMOTE inflates downstream privacy loss.

    ``d`` is the data dimension, ``k`` the number of neighbours, ``n1`` the
    minority count, ``N`` the number of generated points and ``gamma`` the
    Chernoff slack.
    """

    d: int
    k: int
    n1: int
    N: int
    gamma: float = 0.0

    def __post_init__(self):
        if self.d < 0:
            raise PrivacyError("d must be non-negative")
        if self.k < 1 or self.n1 < 1:
            raise PrivacyError("k and n1 must be positive")
        if self.N < 0:
            raise PrivacyError("N must be non-negative")
        if self.gamma < 0:
            raise PrivacyError("gamma must be non-negative")

    @property
    def replication(self) -> int:
        """``ceil(N / n1)``, floored at 1."""
        return max(1, -(-self.N // self.n1))

    @property
    def growth(self) -> float:
        """``2^{0.4042 d}``."""
        return 2.0 ** (KISSING_UPPER_EXPONENT * self.d)


@dataclass(frozen=True)
class SmoteApproxBudget:
    epsilon: float
    delta: float
    log_delta: float
    vacuous: bool

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "log_delta": self.log_delta,
            "vacuous": self.vacuous,
        }


@dataclass(frozen=True)
class KissingBound:
    lower: float
    upper: float
    exact_small_d: Optional[int]


@dataclass(frozen=True)
class BaggingParams:
    m: int
    k_sub: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.k_sub < 1:
            raise PrivacyError("m and k_sub must be positive")


# --------------------------------------------------------------------------
# mechanisms


def laplace_noise(scale: float, rng: np.random.Generator, size=None):
    """Draw from Laplace(0, scale)."""
    if not scale > 0:
        raise PrivacyError(f"Laplace scale must be positive, got {scale}")
    return rng.laplace(0.0, scale, size=size)


def gaussian_noise_sigma(l2_sensitivity: float, budget: PrivacyBudget) -> float:
    """Standard deviation of the classical Gaussian mechanism.

    ``sigma = sens * sqrt(2 ln(1.25 / delta)) / epsilon``; the guarantee only
    holds for ``epsilon < 1`` and ``delta > 0``.
    """
    if not l2_sensitivity > 0:
        raise PrivacyError("L2 sensitivity must be positive")
    if not 0 < budget.epsilon < 1:
        raise PrivacyError(
            f"Gaussian mechanism requires 0 < epsilon < 1, got {budget.epsilon}"
        )
    if not 0 < budget.delta < 1:
        raise PrivacyError(f"Gaussian mechanism requires delta in (0, 1), got {budget.delta}")
    return l2_sensitivity * math.sqrt(2.0 * math.log(1.25 / budget.delta)) / budget.epsilon


def clip_scalar(x: float, R: float) -> float:
    if not R > 0:
        raise PrivacyError("clip radius must be positive")
    return max(-R, min(x, R))


def clip_rows(G: np.ndarray, C: float) -> np.ndarray:
    """Scale each row of ``G`` to l2 norm at most ``C``."""
    norms = np.linalg.norm(G, axis=1)
    factor = np.minimum(1.0, C / np.where(norms > 0, norms, 1.0))
    out = G * factor[:, None]
    # the rescaled norm can land one ulp above C
    over = np.linalg.norm(out, axis=1) > C
    while np.any(over):
        out[over] *= np.nextafter(1.0, 0.0)
        over = np.linalg.norm(out, axis=1) > C
    return out


# --------------------------------------------------------------------------
# composition


def compose_basic(budgets: Iterable[PrivacyBudget]) -> PrivacyBudget:
    budgets = list(budgets)
    if not budgets:
        raise PrivacyError("cannot compose an empty list of budgets")
    return PrivacyBudget(
        math.fsum(b.epsilon for b in budgets), math.fsum(b.delta for b in budgets)
    )


def compose_advanced(per_mech: PrivacyBudget, m: int, delta_prime: float) -> PrivacyBudget:
    """m-fold advanced composition.

    Returns ``(sqrt(2 m ln(1/delta')) eps + m eps (e^eps - 1), m delta + delta')``.
    """
    if m < 1:
        raise PrivacyError("m must be at least 1")
    if not 0 < delta_prime < 1:
        raise PrivacyError(f"delta' must lie in (0, 1), got {delta_prime}")
    eps = per_mech.epsilon
    eps_total = math.sqrt(2.0 * m * math.log(1.0 / delta_prime)) * eps + m * eps * math.expm1(eps)
    return PrivacyBudget(eps_total, m * per_mech.delta + delta_prime)


def invert_advanced(target_epsilon: float, m: int, delta_prime: float) -> float:
    """Largest per-mechanism epsilon whose m-fold advanced composition is <= target.

    Solved by bisection; the composed epsilon is strictly increasing.
    """
    if not target_epsilon > 0:
        raise PrivacyError("target epsilon must be positive")

    def total(e):
        return compose_advanced(PrivacyBudget(e), m, delta_prime).epsilon

    lo, hi = 0.0, target_epsilon
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if total(mid) <= target_epsilon:
            lo = mid
        else:
            hi = mid
    if not lo > 0:
        raise PrivacyError("advanced composition inversion produced a non-positive epsilon")
    return lo


# --------------------------------------------------------------------------
# adjustments for non-private pre-processing


def oversampling_adjusted_budget(base: PrivacyBudget, N: int, n1: int) -> PrivacyBudget:
    """Budget of a mechanism run on data with N deterministically replicated minority rows.

    ``N = 0`` means no augmentation and returns ``base`` unchanged.
    """
    if n1 < 1:
        raise PrivacyError("n1 must be positive")
    if N < 0:
        raise PrivacyError("N must be non-negative")
    if N == 0:
        return base
    factor = -(-N // n1) + 1
    return PrivacyBudget(base.epsilon * factor, base.delta * factor)


def smote_adjusted_epsilon_pure(base_epsilon: float, adj: SmoteAdjustment) -> float:
    """``eps (2^{0.4042 d} ceil(N/n1) + 1)``."""
    return base_epsilon * (adj.growth * adj.replication + 1.0)


def smote_adjusted_budget_approx(base_epsilon: float, adj: SmoteAdjustment) -> SmoteApproxBudget:
    """The (eps', delta) variant of the SMOTE adjustment.

    ``eps' = eps (1 + gamma) 2^{0.4042 d} ceil(N/n1) / k`` and
    ``delta = exp(k 2^{0.4042 d} ceil(N/n1) (eps - gamma^2 / (k (2 + gamma))))``.
    A raw delta above 1 is clamped and flagged as vacuous.
    """
    g, rep, k = adj.growth, adj.replication, adj.k
    eps_prime = base_epsilon * (1.0 + adj.gamma) * g * rep / k
    log_delta = k * g * rep * (base_epsilon - adj.gamma**2 / (k * (2.0 + adj.gamma)))
    vacuous = log_delta > 0
    delta = 1.0 if vacuous else math.exp(log_delta)
    return SmoteApproxBudget(eps_prime, delta, log_delta, vacuous)


def smote_required_epsilon_pure(target_epsilon: float, adj: SmoteAdjustment) -> float:
    """Input epsilon a downstream mechanism may use so the pure adjustment meets the target."""
    return target_epsilon / (adj.growth * adj.replication + 1.0)


def smote_required_epsilon_approx(target_epsilon: float, adj: SmoteAdjustment) -> float:
    return target_epsilon * adj.k / ((1.0 + adj.gamma) * adj.growth * adj.replication)


def kissing_bound(d: int, k: int, n1: int) -> KissingBound:
    """Bounds on how often one point can be among the k nearest neighbours of n1 others."""
    if d < 1 or k < 1 or n1 < 1:
        raise PrivacyError("d, k and n1 must be positive")
    lower = k * 2.0 ** (KISSING_LOWER_EXPONENT * d)
    upper = min(k * 2.0 ** (KISSING_UPPER_EXPONENT * d), float(n1))
    exact = KISSING_NUMBERS.get(d)
    exact_small_d = None if exact is None else min(k * exact, n1)
    return KissingBound(lower, upper, exact_small_d)


# --------------------------------------------------------------------------
# bagging


def bagging_intrinsic_budget(p: BaggingParams) -> PrivacyBudget:
    """Intrinsic privacy of bagging non-private learners with replacement."""
    return bagging_budget_from_product(p.m * p.k_sub, p.n)


def bagging_budget_from_product(mk: float, n: int) -> PrivacyBudget:
    """Same as :func:`bagging_intrinsic_budget` for a real-valued product ``m * k``."""
    if n < 2:
        raise PrivacyError("bagging accounting needs n >= 2")
    if not mk > 0:
        raise PrivacyError("m * k must be positive")
    eps = mk * math.log1p(1.0 / n)
    delta = -math.expm1(mk * math.log1p(-1.0 / n))
    return PrivacyBudget(eps, delta)


def bagging_inverted_mk(n: int, c: float) -> float:
    """``m k = ln(1 - n^{-c}) / (ln(n - 1) - ln n)``, i.e. the product giving delta = n^{-c}."""
    if n < 2:
        raise PrivacyError("n must be at least 2")
    if not c > 1:
        raise PrivacyError("c must exceed 1")
    return math.log1p(-(float(n) ** -c)) / math.log1p(-1.0 / n)
