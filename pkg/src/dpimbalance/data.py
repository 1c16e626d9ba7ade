"""Synthetic mixtures and CSV ingestion.

Gaussian draws come from numpy's ``Generator.standard_normal`` (ziggurat
transform over PCG64 uniforms), so outputs are bit-stable for a given seed.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .analytic import MixtureSpec
from .preprocess import Dataset


class DataError(ValueError):
    pass


class DataDependentBoundsWarning(UserWarning):
    """Feature bounds were inferred from the data, which is not differentially private."""


@dataclass
class MixtureGenSpec:
    """Two-class Gaussian mixture with a shared diagonal covariance."""

    mean0: Sequence[float] = (0.0, 0.0)
    mean1: Sequence[float] = (4.0, 4.0)
    variances: Sequence[float] = (4.0, 4.0)
    p1: float = 0.1
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        self.mean0 = np.asarray(self.mean0, dtype=float)
        self.mean1 = np.asarray(self.mean1, dtype=float)
        self.variances = np.broadcast_to(
            np.asarray(self.variances, dtype=float), self.mean0.shape
        ).copy()
        if self.mean0.shape != self.mean1.shape:
            raise ValueError("class means must have the same dimension")
        if not 0 < self.p1 < 1:
            raise ValueError("p1 must lie in (0, 1)")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be positive")

    @property
    def d(self) -> int:
        return self.mean0.shape[0]


def generate_mixture(spec: MixtureGenSpec) -> Dataset:
    """Draw ``spec.n`` labelled points; bounds are mean +/- 6 std over both classes."""
    rng = np.random.default_rng(spec.seed)
    y = (rng.random(spec.n) < spec.p1).astype(np.int64)
    std = np.sqrt(spec.variances)
    means = np.where(y[:, None] == 1, spec.mean1, spec.mean0)
    X = means + std * rng.standard_normal((spec.n, spec.d))
    lower = np.minimum(spec.mean0, spec.mean1) - 6 * std
    upper = np.maximum(spec.mean0, spec.mean1) + 6 * std
    return Dataset(np.clip(X, lower, upper), y, lower, upper)


def generate_mixture_counts(spec: MixtureGenSpec, n0: int, n1: int) -> Dataset:
    """Like :func:`generate_mixture` but with exact class counts (``spec.n``/``p1`` ignored).

    Rows are shuffled so the classes are interleaved.
    """
    if n0 < 1 or n1 < 1:
        raise ValueError("both class counts must be positive")
    rng = np.random.default_rng(spec.seed)
    y = rng.permutation(np.repeat(np.array([0, 1], dtype=np.int64), [n0, n1]))
    std = np.sqrt(spec.variances)
    means = np.where(y[:, None] == 1, spec.mean1, spec.mean0)
    X = means + std * rng.standard_normal((y.size, spec.d))
    lower = np.minimum(spec.mean0, spec.mean1) - 6 * std
    upper = np.maximum(spec.mean0, spec.mean1) + 6 * std
    return Dataset(np.clip(X, lower, upper), y, lower, upper)


def generate_1d_mixture(spec: MixtureSpec, n: int, rng: np.random.Generator) -> Dataset:
    """One-dimensional mixture with P(y = 1) = 1 / (1 + r*).

    Values are not clipped. The declared bounds are [-R, R] when ``spec.R``
    is set and mean +/- 6 sigma otherwise.
    """
    y = (rng.random(n) < spec.p1).astype(np.int64)
    x = np.where(y == 1, spec.mu1, spec.mu0) + spec.sigma * rng.standard_normal(n)
    if spec.R is not None:
        lo, hi = -spec.R, spec.R
    else:
        lo = min(spec.mu0, spec.mu1) - 6 * spec.sigma
        hi = max(spec.mu0, spec.mu1) + 6 * spec.sigma
    return Dataset(x[:, None], y, [lo], [hi])


# --------------------------------------------------------------------------
# CSV


def _parse_float(value: str, row: int, col: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise DataError(f"row {row}: column {col!r} is not numeric ({value!r})") from None
    if not math.isfinite(v):
        raise DataError(f"row {row}: column {col!r} is not finite ({value!r})")
    return v


def load_csv(
    path,
    label_column: str,
    bounds: Optional[dict] = None,
    positive_label: Optional[str] = None,
    features: Optional[Sequence[str]] = None,
) -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    ``bounds`` maps feature name to ``(lo, hi)``; values outside are clipped
    and counted in ``ds.meta["clip_counts"]``. Without bounds they are
    inferred from the data and a :class:`DataDependentBoundsWarning` is
    raised. Labels are mapped to 0/1: ``positive_label`` becomes 1, otherwise
    numeric 0/1 labels are kept and any other two-valued column has its
    minority value mapped to 1.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file or missing header")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found")
        names = list(features) if features is not None else [h for h in header if h != label_column]
        missing = [f for f in names if f not in header]
        if missing:
            raise DataError(f"{path}: missing feature columns {missing}")
        rows, labels = [], []
        for i, rec in enumerate(reader, start=2):
            lab = (rec.get(label_column) or "").strip()
            if lab == "":
                raise DataError(f"row {i}: missing label")
            labels.append(lab)
            rows.append([_parse_float(rec[f], i, f) for f in names])
    if not rows:
        raise DataError(f"{path}: no data rows")

    y = _map_labels(labels, positive_label)
    X = np.asarray(rows, dtype=float)
    if bounds is not None:
        try:
            lower = np.array([float(bounds[f][0]) for f in names])
            upper = np.array([float(bounds[f][1]) for f in names])
        except KeyError as exc:
            raise DataError(f"no bounds supplied for feature {exc.args[0]!r}") from None
    else:
        warnings.warn(
            f"{path}: feature bounds inferred from the data; this is not differentially private",
            DataDependentBoundsWarning,
            stacklevel=2,
        )
        lower, upper = X.min(axis=0), X.max(axis=0)
        flat = upper <= lower
        upper = np.where(flat, lower + 1.0, upper)
    below, above = X < lower, X > upper
    clip_counts = {
        f: int(below[:, j].sum() + above[:, j].sum()) for j, f in enumerate(names)
    }
    X = np.clip(X, lower, upper)
    ds = Dataset(
        X,
        y,
        lower,
        upper,
        meta={
            "source": str(path),
            "features": names,
            "label_column": label_column,
            "clip_counts": clip_counts,
            "bounds_inferred": bounds is None,
        },
    )
    if ds.n0 == 0 or ds.n1 == 0:
        raise DataError(f"{path}: only one class present")
    return ds


def _map_labels(labels: list, positive_label: Optional[str]) -> np.ndarray:
    values = sorted(set(labels))
    if positive_label is not None:
        if positive_label not in values:
            raise DataError(f"positive label {positive_label!r} never occurs")
        return np.array([lab == positive_label for lab in labels], dtype=np.int64)
    if len(values) == 1:
        raise DataError(f"only one class present (label {values[0]!r})")
    if len(values) != 2:
        raise DataError(f"label column must be binary, found {len(values)} distinct values")
    try:
        numeric = sorted(float(v) for v in values)
    except ValueError:
        numeric = None
    if numeric == [0.0, 1.0]:
        return np.array([float(lab) == 1.0 for lab in labels], dtype=np.int64)
    counts = {v: labels.count(v) for v in values}
    minority = min(values, key=lambda v: (counts[v], v))
    return np.array([lab == minority for lab in labels], dtype=np.int64)


def save_csv(ds: Dataset, path, feature_names: Optional[Sequence[str]] = None, label_column: str = "label") -> None:
    """Write features and label; floats use ``repr`` so reloading is exact."""
    names = list(feature_names or ds.meta.get("features") or [f"x{j}" for j in range(ds.d)])
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*names, label_column])
        for row, lab in zip(ds.X, ds.y):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])
    tmp.replace(path)


def dataset_stats(ds: Dataset) -> dict:
    return {
        "n": ds.n,
        "d": ds.d,
        "n0": ds.n0,
        "n1": ds.n1,
        "r": ds.ratio,
        "bounds": {"lower": ds.lower.tolist(), "upper": ds.upper.tolist()},
        "clip_counts": ds.meta.get("clip_counts", {}),
    }


def subsample_to_ratio(ds: Dataset, ratio: float, rng: np.random.Generator, n_total: Optional[int] = None) -> Dataset:
    """Randomly drop rows so that n0 / n1 is approximately ``ratio``."""
    idx0 = np.flatnonzero(ds.y == 0)
    idx1 = np.flatnonzero(ds.y == 1)
    if n_total is None:
        n1 = min(len(idx1), int(len(idx0) / ratio))
    else:
        n1 = max(1, int(round(n_total / (1.0 + ratio))))
    n0 = int(round(n1 * ratio))
    if n1 > len(idx1) or n0 > len(idx0):
        raise DataError("not enough rows to reach the requested ratio")
    keep = np.concatenate([rng.choice(idx0, n0, replace=False), rng.choice(idx1, n1, replace=False)])
    return ds.subset(np.sort(keep))
