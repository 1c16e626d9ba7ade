"""Non-private augmentation (deterministic oversampling, SMOTE) and the
dataset / class-weight utilities the trainers consume."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dp_core import PrivacyBudget, laplace_noise

log = logging.getLogger(__name__)

ORIGINAL = "orig"


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with public per-feature bounds and a binary label vector.

    ``tags`` records row provenance ("orig", "oversample", "smote", "synth").
    ``radius`` is set once rows have been projected into an l2 ball.
    """

    X: np.ndarray
    y: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    tags: Optional[np.ndarray] = None
    radius: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y).astype(np.int64)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if y.size and not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (X.shape[1],)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (X.shape[1],)).copy()
        if np.any(upper <= lower):
            raise ValueError("public bounds need lower < upper for every feature")
        tags = self.tags
        if tags is None:
            tags = np.full(X.shape[0], ORIGINAL, dtype=object)
        else:
            tags = np.asarray(tags, dtype=object)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "tags", tags)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n1(self) -> int:
        return int(self.y.sum())

    @property
    def n0(self) -> int:
        return self.n - self.n1

    @property
    def ratio(self) -> float:
        """Imbalance ratio n0 / n1."""
        return self.n0 / self.n1 if self.n1 else math.inf

    @property
    def minority(self) -> np.ndarray:
        return self.X[self.y == 1]

    def subset(self, idx) -> "Dataset":
        return replace(self, X=self.X[idx], y=self.y[idx], tags=self.tags[idx])

    def concat(self, X_new, y_new, tag: str) -> "Dataset":
        X_new = np.asarray(X_new, dtype=float).reshape(-1, self.d)
        y_new = np.broadcast_to(np.asarray(y_new, dtype=np.int64), (X_new.shape[0],))
        return replace(
            self,
            X=np.vstack([self.X, X_new]),
            y=np.concatenate([self.y, y_new]),
            tags=np.concatenate([self.tags, np.full(X_new.shape[0], tag, dtype=object)]),
        )

    def with_minority_positive(self) -> "Dataset":
        """Relabel so that class 1 is the minority."""
        if self.n1 <= self.n0:
            return self
        return replace(self, y=1 - self.y)

    def clipped_to_bounds(self) -> "Dataset":
        return replace(self, X=np.clip(self.X, self.lower, self.upper))


@dataclass(frozen=True)
class ClassWeights:
    w: np.ndarray
    w_class0: float
    w_class1: float

    @classmethod
    def uniform(cls, ds: Dataset) -> "ClassWeights":
        return cls(np.ones(ds.n), 1.0, 1.0)

    def for_labels(self, y: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(y) == 1, self.w_class1, self.w_class0)


def oversample_deterministic(ds: Dataset, N: int) -> Dataset:
    """Append exactly N copies of minority rows.

    The first ``N mod n1`` minority rows get ``ceil(N / n1)`` copies and the
    rest ``floor(N / n1)``.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    minority = ds.minority
    n1 = minority.shape[0]
    if n1 < 1:
        raise ValueError("oversampling needs at least one minority row")
    base, extra = divmod(N, n1)
    counts = np.full(n1, base, dtype=np.int64)
    counts[:extra] += 1
    return ds.concat(np.repeat(minority, counts, axis=0), 1, "oversample")


def knn_indices(points: np.ndarray, k: int, chunk: int = 256) -> np.ndarray:
    """k nearest l2 neighbours of every row, excluding the row itself.

    Ties are broken by lower index. Distances are computed from explicit
    differences so that equal distances compare equal.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k-NN needs 1 <= k < n, got k={k}, n={n}")
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = points[start:stop, None, :] - points[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        dist[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # stable sort keeps lower indices first among equal distances
        order = np.argsort(dist, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


def smote(minority: np.ndarray, N: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Generate N synthetic minority points by per-coordinate interpolation.

    Point t (1-based) uses base row ``t mod n1`` (0 read as n1) and one of its
    k nearest neighbours chosen uniformly; coordinate j is
    ``(1 - u_j) * neighbour_j + u_j * base_j`` with ``u_j ~ U[0, 1]``.
    """
    minority = np.asarray(minority, dtype=float)
    n1, d = minority.shape
    if not 1 <= k < n1:
        raise ValueError(f"SMOTE needs n1 > k >= 1, got n1={n1}, k={k}")
    if N < 0:
        raise ValueError("N must be non-negative")
    nbrs = knn_indices(minority, k)
    base = np.arange(N) % n1
    choice = nbrs[base, rng.integers(0, k, size=N)]
    u = rng.random((N, d))
    return (1.0 - u) * minority[choice] + u * minority[base]


def smote_augment(ds: Dataset, N: int, k: int, rng: np.random.Generator) -> Dataset:
    return ds.concat(smote(ds.minority, N, k, rng), 1, "smote")


def class_weights(
    ds: Dataset,
    count_budget: Optional[PrivacyBudget] = None,
    rng: Optional[np.random.Generator] = None,
) -> ClassWeights:
    """Inverse class-frequency weights normalised so the largest weight is 1.

    Class proportions are treated as public. Passing ``count_budget`` measures
    the two class counts with Laplace noise instead (L1 sensitivity 2 under
    record replacement).
    """
    n0, n1 = float(ds.n0), float(ds.n1)
    if count_budget is not None:
        if rng is None:
            raise ValueError("a random source is required for noisy counts")
        noise = laplace_noise(2.0 / count_budget.epsilon, rng, size=2)
        n0, n1 = max(n0 + noise[0], 1.0), max(n1 + noise[1], 1.0)
    if n0 <= 0 or n1 <= 0:
        raise ValueError("both classes must be non-empty to compute class weights")
    raw0, raw1 = (n0 + n1) / n0, (n0 + n1) / n1
    top = max(raw0, raw1)
    w0, w1 = raw0 / top, raw1 / top
    return ClassWeights(np.where(ds.y == 1, w1, w0), w0, w1)


def bound_features(ds: Dataset, radius: float) -> Dataset:
    """Project each row into the l2 ball of the given radius: ``x * min(1, radius / |x|)``."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    norms = np.linalg.norm(ds.X, axis=1)
    scale = np.ones_like(norms)
    over = norms > radius
    scale[over] = radius / norms[over]
    return replace(ds, X=ds.X * scale[:, None], radius=radius)


def to_unit_box(X: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Affine map of the public bounding box onto [-1, 1]^d."""
    return 2.0 * (np.asarray(X, dtype=float) - lower) / (upper - lower) - 1.0


def normalize_to_ball(ds: Dataset, radius: float) -> Dataset:
    """Map features into the l2 ball of ``radius`` using only the public bounds.

    Rows are sent to [-1, 1]^d, shrunk by sqrt(d) and then projected, so the
    transform is data-independent and can be applied identically to test data.
    """
    Z = to_unit_box(np.clip(ds.X, ds.lower, ds.upper), ds.lower, ds.upper)
    Z *= radius / math.sqrt(ds.d)
    scaled = replace(ds, X=Z, lower=np.full(ds.d, -radius), upper=np.full(ds.d, radius))
    return bound_features(scaled, radius)
