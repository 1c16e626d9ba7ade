"""A small select-measure-project synthesizer and class-balancing sampler.

The synthesizer measures the class prior and every class-conditional one-way
marginal over a fixed public discretisation with Laplace noise, then projects
each noisy histogram back to the simplex by clamping and renormalising.
Cross-feature correlations are not modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dp_core import PrivacyBudget, PrivacyError, compose_basic, laplace_noise
from .preprocess import Dataset

CONDITIONAL = "conditional"
REJECTION = "rejection"

# Bounded-neighbour L1 sensitivity of a histogram: one count leaves a cell and
# one enters another.
HISTOGRAM_SENSITIVITY = 2.0


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Discretizer:
    lower: np.ndarray
    upper: np.ndarray
    bins: int = 10

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if self.bins < 1:
            raise ValueError("bins must be positive")
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise ValueError("bounds must satisfy lower < upper per feature")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def from_dataset(cls, ds: Dataset, bins: int = 10) -> "Discretizer":
        return cls(ds.lower, ds.upper, bins)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    @property
    def edges(self) -> np.ndarray:
        """(d, bins + 1) array of bin edges."""
        return np.linspace(self.lower, self.upper, self.bins + 1, axis=1)

    @property
    def midpoints(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[:, :-1] + e[:, 1:])

    def encode(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.d)
        frac = (X - self.lower) / (self.upper - self.lower)
        return np.clip(np.floor(frac * self.bins), 0, self.bins - 1).astype(np.int64)

    def decode(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64).reshape(-1, self.d)
        return self.midpoints[np.arange(self.d), codes]


@dataclass(frozen=True)
class MarginalSynthModel:
    """Noisy class prior plus per-class, per-feature noisy bin distributions."""

    class_prior: np.ndarray  # (2,)
    marginals: np.ndarray  # (2, d, bins)
    disc: Discretizer
    budget_spent: PrivacyBudget

    def validate(self) -> None:
        for dist in (self.class_prior, *self.marginals.reshape(-1, self.disc.bins)):
            if np.any(dist < 0) or abs(dist.sum() - 1.0) > 1e-9:
                raise AssertionError("synthesizer holds an invalid probability vector")


def _project(hist: np.ndarray) -> np.ndarray:
    clamped = np.maximum(hist, 0.0)
    total = clamped.sum()
    if total <= 0:
        return np.full(hist.shape, 1.0 / hist.size)
    return clamped / total


def fit_marginal_synth(
    ds: Dataset, disc: Discretizer, budget: PrivacyBudget, rng: np.random.Generator
) -> MarginalSynthModel:
    """Fit the synthesizer with pure epsilon-DP.

    The budget is split evenly over ``2 d + 1`` histograms (class prior and
    one marginal per class and feature), each perturbed with
    Laplace(2 / eps_share). ``budget.epsilon = inf`` disables noise.
    """
    if budget.delta != 0:
        raise PrivacyError("the marginal synthesizer uses pure epsilon accounting (delta = 0)")
    if not budget.epsilon > 0:
        raise PrivacyError("epsilon must be positive")
    if ds.n0 == 0 or ds.n1 == 0:
        raise ValueError("both classes must be present to fit class-conditional marginals")
    if disc.d != ds.d:
        raise ValueError("discretizer dimension does not match the data")

    n_measure = 2 * ds.d + 1
    share = budget.epsilon / n_measure
    scale = None if math.isinf(share) else HISTOGRAM_SENSITIVITY / share

    def measure(counts):
        counts = counts.astype(float)
        if scale is not None:
            counts = counts + laplace_noise(scale, rng, size=counts.shape)
        return _project(counts)

    prior = measure(np.bincount(ds.y, minlength=2))
    codes = disc.encode(ds.X)
    marginals = np.empty((2, ds.d, disc.bins))
    for c in (0, 1):
        rows = codes[ds.y == c]
        for j in range(ds.d):
            marginals[c, j] = measure(np.bincount(rows[:, j], minlength=disc.bins))

    if not math.isinf(share):
        spent = compose_basic([PrivacyBudget(share)] * n_measure)
        if abs(spent.epsilon - budget.epsilon) > 1e-12:
            raise AssertionError("synthesizer budget split does not add up")
    model = MarginalSynthModel(prior, marginals, disc, budget)
    model.validate()
    return model


def _sample_codes(model: MarginalSynthModel, cls: int, count: int, rng) -> np.ndarray:
    d, bins = model.disc.d, model.disc.bins
    codes = np.empty((count, d), dtype=np.int64)
    for j in range(d):
        codes[:, j] = rng.choice(bins, size=count, p=model.marginals[cls, j])
    return codes


def sample_conditional(
    model: MarginalSynthModel, cls: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``count`` rows of class ``cls`` (bin midpoints) feature by feature."""
    if cls not in (0, 1):
        raise ValueError("class must be 0 or 1")
    if count < 0:
        raise ValueError("count must be non-negative")
    return model.disc.decode(_sample_codes(model, cls, count, rng))


def balance_with_synth(
    model: MarginalSynthModel, N: int, mode: str, rng: np.random.Generator
) -> Dataset:
    """A synthetic dataset with N/2 rows of each class.

    ``conditional`` samples each class directly. ``rejection`` draws labels
    from the noisy prior then features, keeping the first N/2 of each class
    and discarding overflow; it gives up after ``10**6 * N`` draws.
    """
    if N < 0 or N % 2:
        raise ValueError("N must be a non-negative even integer")
    half = N // 2
    if mode == CONDITIONAL:
        X = np.vstack([sample_conditional(model, 1, half, rng), sample_conditional(model, 0, half, rng)])
        y = np.repeat([1, 0], half)
    elif mode == REJECTION:
        X, y = _rejection(model, half, rng)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return Dataset(X, y, model.disc.lower, model.disc.upper, tags=np.full(N, "synth", dtype=object))


def _rejection(model: MarginalSynthModel, half: int, rng):
    max_draws = 10**6 * 2 * half
    if half and model.class_prior.min() < 1e-12:
        raise SamplingError("a class has (numerically) zero prior mass; rejection sampling cannot finish")
    kept = {0: [], 1: []}
    need = {0: half, 1: half}
    draws = 0
    while (need[0] or need[1]) and draws < max_draws:
        batch = min(max_draws - draws, max(64, 2 * (need[0] + need[1])))
        labels = rng.choice(2, size=batch, p=model.class_prior)
        draws += batch
        for c in (0, 1):
            take = min(need[c], int(np.sum(labels == c)))
            if take:
                kept[c].append(sample_conditional(model, c, take, rng))
                need[c] -= take
    if need[0] or need[1]:
        raise SamplingError(f"rejection sampling exhausted {max_draws} draws")
    d = model.disc.d
    X = np.vstack([np.vstack(kept[1]) if kept[1] else np.empty((0, d)),
                   np.vstack(kept[0]) if kept[0] else np.empty((0, d))])
    y = np.repeat([1, 0], half)
    return X, y


def end_to_end_private_balance(
    ds: Dataset,
    disc: Discretizer,
    budget: PrivacyBudget,
    N: int,
    mode: str,
    rng: np.random.Generator,
) -> tuple[Dataset, PrivacyBudget]:
    """Fit the synthesizer and draw a balanced dataset; sampling costs no budget."""
    model = fit_marginal_synth(ds, disc, budget, rng)
    return balance_with_synth(model, N, mode, rng), model.budget_spent
