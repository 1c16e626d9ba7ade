"""Imbalanced-classification metrics, stratified splits and the multi-seed runner."""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .data import MixtureGenSpec, generate_mixture, load_csv, subsample_to_ratio
from .models import LinearModel
from .pipeline import MethodSpec, PipelineClassifier, fit_pipeline
from .preprocess import ORIGINAL, Dataset

METRICS = (
    "auc",
    "f1",
    "balanced_accuracy",
    "precision",
    "recall",
    "worst_class_accuracy",
    "macro_avg_accuracy",
    "g_mean",
    "mcc",
)
DEFAULT_EPSILONS = (0.05, 0.1, 0.5, 1.0, 5.0)


class StageError(RuntimeError):
    """Wraps an exception raised inside one experiment stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class MetricConventionWarning(UserWarning):
    """An undefined metric was replaced by its conventional value."""


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class MetricsRow:
    auc: float
    f1: float
    balanced_accuracy: float
    precision: float
    recall: float
    worst_class_accuracy: float
    macro_avg_accuracy: float
    g_mean: float
    mcc: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    auc_defined: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


def rank_auc(scores, labels) -> float:
    """Mann-Whitney AUC with midranks for ties; ``nan`` if a class is absent."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    n1 = int(np.sum(labels == 1))
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        return math.nan
    ranks = rankdata(scores)
    u = ranks[labels == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def _div(num: float, den: float, name: str) -> float:
    if den == 0:
        warnings.warn(f"{name} undefined (0/0); reporting 0", MetricConventionWarning, stacklevel=3)
        return 0.0
    return num / den


def metrics_from_confusion(tp: int, fp: int, tn: int, fn: int, auc: float = math.nan) -> MetricsRow:
    pos, neg = tp + fn, tn + fp
    tpr = tp / pos if pos else 0.0
    tnr = tn / neg if neg else 0.0
    precision = _div(tp, tp + fp, "precision")
    f1 = _div(2 * tp, 2 * tp + fp + fn, "f1")
    ba = 0.5 * (tpr + tnr)
    macro = (tpr + tnr) / 2.0
    den = math.sqrt(float(tp + fp) * float(tp + fn) * float(tn + fp) * float(tn + fn))
    mcc = _div(tp * tn - fp * fn, den, "mcc")
    return MetricsRow(
        auc=auc,
        f1=f1,
        balanced_accuracy=ba,
        precision=precision,
        recall=tpr,
        worst_class_accuracy=min(tpr, tnr),
        macro_avg_accuracy=macro,
        g_mean=math.sqrt(tpr * tnr),
        mcc=mcc,
        accuracy=(tp + tn) / (pos + neg),
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        auc_defined=not math.isnan(auc),
    )


def compute_metrics(scores, labels, threshold: float = 0.5) -> MetricsRow:
    """Metrics for probability-scale ``scores``; positive when ``score >= threshold``."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel()
    if scores.size == 0 or scores.shape != labels.shape:
        raise ValueError("scores and labels must be nonempty and of equal length")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0/1")
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    tn = int(np.sum(~pred & ~pos))
    fn = int(np.sum(~pred & pos))
    return metrics_from_confusion(tp, fp, tn, fn, rank_auc(scores, labels))


@dataclass
class MetricsReport:
    """Per-seed metric rows for one (dataset, method, epsilon) cell."""

    rows: list = field(default_factory=list)

    def values(self, metric: str) -> np.ndarray:
        return np.array([getattr(r, metric) for r in self.rows], dtype=float)

    def mean(self, metric: str) -> float:
        v = self.values(metric)
        v = v[~np.isnan(v)]
        return float(v.mean()) if v.size else math.nan

    def std(self, metric: str) -> float:
        v = self.values(metric)
        v = v[~np.isnan(v)]
        return float(v.std(ddof=1)) if v.size > 1 else 0.0

    def summary(self) -> dict:
        return {m: {"mean": self.mean(m), "std": self.std(m)} for m in (*METRICS, "accuracy")}


# --------------------------------------------------------------------------
# splitting


def stratified_split(ds: Dataset, test_fraction: float = 0.2, seed=0) -> tuple[Dataset, Dataset]:
    """Per-class random split; each class contributes ``round(test_fraction * n_c)`` test rows."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in (0, 1):
        idx = np.flatnonzero(ds.y == c)
        if idx.size < 2:
            raise ValueError(f"class {c} has {idx.size} rows; at least 2 are needed to split")
        n_test = min(max(1, int(round(test_fraction * idx.size))), idx.size - 1)
        test_idx.append(rng.permutation(idx)[:n_test])
    test_mask = np.zeros(ds.n, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    return ds.subset(np.flatnonzero(~test_mask)), ds.subset(np.flatnonzero(test_mask))


# --------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentConfig:
    """A dataset source, the methods to compare and the (epsilon, seed) grid.

    ``dataset`` is either ``{"kind": "mixture", ...MixtureGenSpec fields}`` or
    ``{"kind": "csv", "path": ..., "label_column": ..., "bounds": ...,
    "positive_label": ..., "subsample_ratio": ...}``.
    """

    dataset: dict
    methods: list
    epsilons: Sequence[float] = DEFAULT_EPSILONS
    delta: float = 1e-5
    seeds: int = 10
    test_fraction: float = 0.2
    master_seed: int = 0
    workers: int = 1
    name: Optional[str] = None

    def __post_init__(self):
        if self.seeds < 1:
            raise ValueError("seeds must be at least 1")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")
        if not self.methods:
            raise ValueError("at least one method is required")
        self.methods = [m if isinstance(m, MethodSpec) else MethodSpec.from_dict(m) for m in self.methods]
        names = [m.name for m in self.methods]
        if len(set(names)) != len(names):
            raise ValueError("method names must be unique")
        self.epsilons = [float(e) for e in self.epsilons]
        if any(not e > 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1)")

    @property
    def dataset_name(self) -> str:
        return self.name or self.dataset.get("name") or self.dataset.get("kind", "dataset")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dataset": dict(self.dataset),
            "methods": [m.to_dict() for m in self.methods],
            "epsilons": list(self.epsilons),
            "delta": self.delta,
            "seeds": self.seeds,
            "test_fraction": self.test_fraction,
            "master_seed": self.master_seed,
            "workers": self.workers,
        }


def load_source(source: Mapping, master_seed: int = 0) -> Dataset:
    kind = source.get("kind")
    if kind == "mixture":
        fields = {k: v for k, v in source.items() if k not in ("kind", "name")}
        return generate_mixture(MixtureGenSpec(**fields))
    if kind == "csv":
        with warnings.catch_warnings():
            if source.get("bounds") is None:
                warnings.simplefilter("always")
            ds = load_csv(
                source["path"],
                source["label_column"],
                bounds=source.get("bounds"),
                positive_label=source.get("positive_label"),
                features=source.get("features"),
            )
        ratio = source.get("subsample_ratio")
        if ratio is not None:
            rng = np.random.default_rng([master_seed, 0xDA7A])
            ds = subsample_to_ratio(ds, ratio, rng, source.get("subsample_n"))
        return ds.with_minority_positive()
    raise ValueError(f"unknown dataset kind {kind!r}")


@dataclass(frozen=True)
class CellResult:
    dataset: str
    method: str
    epsilon: float
    seed: int
    metrics: MetricsRow
    receipt: dict

    def flat(self) -> dict:
        out = {"dataset": self.dataset, "method": self.method, "epsilon": self.epsilon, "seed": self.seed}
        out.update(self.metrics.as_dict())
        out["receipt_epsilon"] = self.receipt.get("epsilon")
        out["receipt_delta"] = self.receipt.get("delta")
        return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cells: list

    def report(self, method: str, epsilon: float) -> MetricsReport:
        return MetricsReport(
            [c.metrics for c in self.cells if c.method == method and c.epsilon == epsilon]
        )

    def summary(self) -> list:
        out = []
        for m in self.config.methods:
            for eps in self.config.epsilons:
                out.append({"method": m.name, "epsilon": eps, **self.report(m.name, eps).summary()})
        return out

    def rank_table(self) -> dict:
        """``{(dataset, eps): {method: {metric: mean}}}`` for :func:`average_ranks`."""
        table = {}
        for eps in self.config.epsilons:
            table[(self.config.dataset_name, eps)] = {
                m.name: {k: self.report(m.name, eps).mean(k) for k in METRICS} for m in self.config.methods
            }
        return table

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = [c.flat() for c in self.cells]
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "cells": [
                {**c.flat(), "receipt": c.receipt} for c in self.cells
            ],
            "summary": self.summary(),
        }


def cell_rng(master_seed: int, seed: int, method_index: int, eps_index: int) -> np.random.Generator:
    """Independent stream per cell, independent of execution order."""
    return np.random.default_rng([master_seed, seed, method_index, eps_index])


def run_cell(
    ds_name: str,
    method: MethodSpec,
    method_index: int,
    train: Dataset,
    test: Dataset,
    epsilon: float,
    eps_index: int,
    delta: float,
    seed: int,
    master_seed: int,
) -> CellResult:
    rng = cell_rng(master_seed, seed, method_index, eps_index)
    try:
        fit = fit_pipeline(method, train, epsilon, delta, rng)
    except Exception as exc:  # noqa: BLE001
        raise StageError(f"fit:{method.name}:eps={epsilon}:seed={seed}", exc) from exc
    if test.tags is not None and np.any(test.tags != ORIGINAL):
        raise StageError("score", AssertionError("test split contains pre-processed rows"))
    try:
        scores, _ = fit.classifier.predict(test.X)
        metrics = compute_metrics(scores, test.y)
    except Exception as exc:  # noqa: BLE001
        raise StageError(f"score:{method.name}:eps={epsilon}:seed={seed}", exc) from exc
    return CellResult(ds_name, method.name, epsilon, seed, metrics, fit.receipt)


def run_experiment(cfg: ExperimentConfig, on_cell: Optional[Callable] = None) -> ExperimentResult:
    """Evaluate every (seed, method, epsilon) cell; results are returned in grid order."""
    try:
        ds = load_source(cfg.dataset, cfg.master_seed)
    except Exception as exc:  # noqa: BLE001
        raise StageError("load", exc) from exc
    name = cfg.dataset_name
    jobs = []
    for seed in range(cfg.seeds):
        try:
            train, test = stratified_split(ds, cfg.test_fraction, seed=[cfg.master_seed, seed])
        except Exception as exc:  # noqa: BLE001
            raise StageError(f"split:seed={seed}", exc) from exc
        for mi, method in enumerate(cfg.methods):
            for ei, eps in enumerate(cfg.epsilons):
                jobs.append((name, method, mi, train, test, eps, ei, cfg.delta, seed, cfg.master_seed))

    def work(job):
        res = run_cell(*job)
        if on_cell is not None:
            on_cell(res)
        return res

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            cells = list(pool.map(work, jobs))
    else:
        cells = [work(j) for j in jobs]
    return ExperimentResult(cfg, cells)


# --------------------------------------------------------------------------
# rankings


class MissingCellWarning(UserWarning):
    pass


def average_ranks(table: Mapping, metrics: Sequence[str] = METRICS) -> tuple[dict, int]:
    """Mean rank per (metric, method) over cells; rank 1 is best, ties share the average.

    ``table`` maps a cell key (e.g. ``(dataset, eps)``) to
    ``{method: {metric: value}}``. A cell missing a value (or holding ``nan``)
    for any method is skipped for that metric. Returns the ranks and the
    number of skipped (cell, metric) pairs.
    """
    methods = sorted({m for cell in table.values() for m in cell})
    if len(methods) < 2:
        raise ValueError("ranking needs at least two methods")
    sums = {k: dict.fromkeys(methods, 0.0) for k in metrics}
    counts = dict.fromkeys(metrics, 0)
    skipped = 0
    for cell in table.values():
        for metric in metrics:
            vals = [cell.get(m, {}).get(metric, math.nan) for m in methods]
            vals = np.array([math.nan if v is None else v for v in vals], dtype=float)
            if np.any(np.isnan(vals)):
                skipped += 1
                continue
            ranks = rankdata(-vals, method="average")
            for m, r in zip(methods, ranks):
                sums[metric][m] += float(r)
            counts[metric] += 1
    if skipped:
        warnings.warn(f"{skipped} (cell, metric) pairs skipped for missing values", MissingCellWarning, stacklevel=2)
    out = {
        k: {m: (sums[k][m] / counts[k] if counts[k] else math.nan) for m in methods} for k in metrics
    }
    return out, skipped


# --------------------------------------------------------------------------
# decision boundaries


def boundary_grid(model, x_range, y_range, resolution) -> np.ndarray:
    """Row-major ``(x, y, score, label)`` rows over a regular grid.

    ``resolution`` is an int or ``(nx, ny)``; y varies slowest. ``model`` is a
    :class:`LinearModel` or :class:`PipelineClassifier` over two features.
    """
    if isinstance(model, LinearModel):
        d = model.coef.shape[0]
    elif isinstance(model, PipelineClassifier):
        d = model.d
    else:
        d = getattr(model, "d", None)
    if d != 2:
        raise ValueError(f"boundary grids need a 2-feature model, got d={d}")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("resolution must be positive")
    xs = np.linspace(x_range[0], x_range[1], nx) if nx > 1 else np.array([0.5 * (x_range[0] + x_range[1])])
    ys = np.linspace(y_range[0], y_range[1], ny) if ny > 1 else np.array([0.5 * (y_range[0] + y_range[1])])
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    scores, labels = model.predict(pts)
    return np.column_stack([pts, scores, labels.astype(float)])


def grid_to_csv(grid: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "score", "label"])
    for x, y, s, lab in grid:
        w.writerow([repr(float(x)), repr(float(y)), repr(float(s)), int(lab)])
    return buf.getvalue()
