"""Command-line entry point.

Exit codes: 0 success, 1 usage/config, 2 data, 3 convergence, 4 infeasible budget.
All outputs are written atomically and are byte-identical for identical flags.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from pathlib import Path

import jsonschema
import numpy as np

from . import dp_core
from .analytic import (
    MixtureSpec,
    analytic_metrics,
    boc_error_bound,
    population_metrics,
    private_boc,
    simulate_metrics,
)
from .data import DataError, dataset_stats, generate_1d_mixture, load_csv, save_csv
from .dp_core import BaggingParams, PrivacyBudget, PrivacyError, SmoteAdjustment
from .evaluation import ExperimentConfig, StageError, boundary_grid, grid_to_csv, run_experiment
from .models import BudgetError, ConfigError, ConvergenceError
from .pipeline import MethodSpec, classifier_from_dict, classifier_to_dict, fit_pipeline
from .preprocess import oversample_deterministic, smote_augment
from .synth import Discretizer, SamplingError, end_to_end_private_balance

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# io helpers


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def emit(text: str, out) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def rows_to_csv(rows: list, fields: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def load_json(path, schema: dict) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise UsageError(f"config {path}: {where}: {exc.message}") from None
    return doc


def _read_bounds(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_data(args):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ds = load_csv(args.data, args.label_column, bounds=_read_bounds(args.bounds))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return ds


# --------------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer"}

METHOD_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"type": "string"},
        "preprocess": {"enum": ["none", "oversample", "smote", "synth"]},
        "trainer": {
            "enum": [
                "baseline", "baseline-weighted", "erm", "erm-weighted",
                "dpsgd", "dpsgd-weighted", "bagging", "bagging-weighted",
            ]
        },
        "weighted": {"type": "boolean"},
        "budget_mode": {"enum": ["unadjusted", "adjusted"]},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lam": _POS, "fit_intercept": {"type": "boolean"}, "N": {"type": "integer", "minimum": 0},
                "smote_k": {"type": "integer", "minimum": 1}, "gamma": {"type": "number", "minimum": 0},
                "bins": {"type": "integer", "minimum": 1}, "n_synth": {"type": "integer", "minimum": 0},
                "mode": {"enum": ["conditional", "rejection"]},
                "clip_norm": _POS, "learning_rate": _POS, "batch_size": {"type": "integer", "minimum": 1},
                "minibatch_size": {"type": "integer", "minimum": 1}, "iterations": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1}, "subsample": _POS, "delta_prime": _POS,
            },
        },
    },
}

DATASET_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"const": "mixture"}, "name": {"type": "string"},
                "mean0": {"type": "array", "items": _NUM}, "mean1": {"type": "array", "items": _NUM},
                "variances": {"oneOf": [_POS, {"type": "array", "items": _POS}]},
                "p1": _POS, "n": {"type": "integer", "minimum": 4}, "seed": _INT,
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "path", "label_column"],
            "properties": {
                "kind": {"const": "csv"}, "name": {"type": "string"}, "path": {"type": "string"},
                "label_column": {"type": "string"}, "bounds": {"type": ["object", "null"]},
                "positive_label": {"type": ["string", "null"]},
                "features": {"type": ["array", "null"], "items": {"type": "string"}},
                "subsample_ratio": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "subsample_n": {"type": ["integer", "null"], "minimum": 4},
            },
        },
    ]
}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dataset", "methods"],
    "properties": {
        "name": {"type": "string"},
        "dataset": DATASET_SCHEMA,
        "methods": {"type": "array", "minItems": 1, "items": METHOD_SCHEMA},
        "epsilons": {"type": "array", "minItems": 1, "items": _POS},
        "delta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "seeds": {"type": "integer", "minimum": 1},
        "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "master_seed": _INT,
        "workers": {"type": "integer", "minimum": 1},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": "string"}, "json": {"type": "string"}},
        },
    },
}

TRAIN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["method", "epsilon"],
    "properties": {
        "method": METHOD_SCHEMA,
        "epsilon": _POS,
        "delta": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
    },
}

SYNTH_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["epsilon", "N"],
    "properties": {
        "epsilon": _POS,
        "N": {"type": "integer", "minimum": 0},
        "bins": {"type": "integer", "minimum": 1},
        "mode": {"enum": ["conditional", "rejection"]},
        "seed": _INT,
    },
}

WARMUP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["mu0", "mu1", "sigma"],
    "properties": {
        "mu0": _NUM, "mu1": _NUM, "sigma": _POS,
        "r_star": {"type": "number", "minimum": 1},
        "gammas": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "n": {"type": "integer", "minimum": 1},
        "coverage": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "epsilon", "delta", "beta", "trials", "R"],
            "properties": {
                "n": {"type": "integer", "minimum": 2}, "epsilon": _POS,
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "trials": {"type": "integer", "minimum": 1}, "R": _POS,
            },
        },
    },
}


# --------------------------------------------------------------------------
# subcommands


def _eps_list(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"not a comma-separated list of numbers: {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise UsageError("epsilon lists must hold positive numbers")
    return vals


def cmd_adjust_eps(args) -> int:
    adj = SmoteAdjustment(args.d, args.k, args.n1, args.N, args.gamma)
    rows = []
    for eps in _eps_list(args.eps_list):
        approx = dp_core.smote_adjusted_budget_approx(eps, adj)
        rows.append({"mode": "forward", "variant": "smote-pure", "input_epsilon": eps,
                     "output_epsilon": dp_core.smote_adjusted_epsilon_pure(eps, adj), "delta": 0.0, "vacuous": False})
        rows.append({"mode": "forward", "variant": "smote-approx", "input_epsilon": eps,
                     "output_epsilon": approx.epsilon, "delta": approx.delta, "vacuous": approx.vacuous})
        over = dp_core.oversampling_adjusted_budget(PrivacyBudget(eps), args.N, args.n1)
        rows.append({"mode": "forward", "variant": "oversample", "input_epsilon": eps,
                     "output_epsilon": over.epsilon, "delta": 0.0, "vacuous": False})
    if args.target_eps:
        for target in _eps_list(args.target_eps):
            rows.append({"mode": "inverse", "variant": "smote-pure", "input_epsilon": target,
                         "output_epsilon": dp_core.smote_required_epsilon_pure(target, adj), "delta": 0.0, "vacuous": False})
            rows.append({"mode": "inverse", "variant": "smote-approx", "input_epsilon": target,
                         "output_epsilon": dp_core.smote_required_epsilon_approx(target, adj), "delta": None, "vacuous": None})
            factor = (-(-args.N // args.n1) + 1) if args.N else 1
            rows.append({"mode": "inverse", "variant": "oversample", "input_epsilon": target,
                         "output_epsilon": target / factor, "delta": 0.0, "vacuous": False})
    fields = ["mode", "variant", "input_epsilon", "output_epsilon", "delta", "vacuous"]
    emit(rows_to_csv(rows, fields), args.out)
    return EXIT_OK


def cmd_bagging_audit(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    lines = []
    if args.m is not None or args.k_sub is not None:
        if args.m is None or args.k_sub is None:
            raise UsageError("--m and --k-sub must be given together")
        b = dp_core.bagging_intrinsic_budget(BaggingParams(args.m, args.k_sub, args.n))
        lines.append(f"intrinsic: m={args.m} k_sub={args.k_sub} n={args.n} epsilon={b.epsilon!r} delta={b.delta!r}")
    if args.c is not None:
        if not args.c > 1:
            raise UsageError("--c must exceed 1")
        mk = dp_core.bagging_inverted_mk(args.n, args.c)
        b = dp_core.bagging_budget_from_product(mk, args.n)
        bound = 1.0 / args.n
        verdict = "holds" if b.epsilon <= bound else "VIOLATED"
        lines.append(f"target delta = n^-c = {float(args.n) ** -args.c!r} (n={args.n}, c={args.c:g})")
        lines.append(f"inverted m*k = {mk!r}")
        lines.append(f"verdict: ε ≤ {_short_sci(bound)} {verdict}")
        lines.append(f"epsilon = {b.epsilon!r}")
        lines.append(f"delta = {b.delta!r}")
    if not lines:
        raise UsageError("give --c, or --m and --k-sub")
    emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _short_sci(x: float) -> str:
    mant, exp = f"{x:.3e}".split("e")
    mant = mant.rstrip("0").rstrip(".")
    return f"{mant}e{int(exp)}"


def cmd_run(args) -> int:
    doc = load_json(args.config, RUN_SCHEMA)
    output = doc.pop("output", {})
    if args.seed is not None:
        doc["master_seed"] = args.seed
    if args.workers is not None:
        doc["workers"] = args.workers
    try:
        cfg = ExperimentConfig(**doc)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"config: {exc}") from None
    csv_path = args.out_csv or output.get("csv")
    json_path = args.out_json or output.get("json")
    if not csv_path and not json_path:
        raise UsageError("no output path: pass --out-csv/--out-json or set config.output")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_experiment(cfg)
    if csv_path:
        atomic_write(csv_path, result.to_csv())
    if json_path:
        atomic_write(json_path, dumps(result.to_dict()))
    print(f"wrote {len(result.cells)} cells", file=sys.stderr)
    return EXIT_OK


def cmd_train(args) -> int:
    doc = load_json(args.config, TRAIN_SCHEMA)
    try:
        method = MethodSpec.from_dict(doc["method"])
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from None
    ds = _load_data(args).with_minority_positive()
    rng = np.random.default_rng(args.seed)
    fit = fit_pipeline(method, ds, doc["epsilon"], doc.get("delta", 0.0), rng)
    model = fit.classifier.model
    members = getattr(model, "members", [model])
    cert = [
        {"grad_norm": m.info.get("grad_norm"), "iterations": m.info.get("iterations")} for m in members
    ]
    out = {
        "config": {"method": method.to_dict(), "epsilon": doc["epsilon"], "delta": doc.get("delta", 0.0),
                   "seed": args.seed, "data": str(args.data), "label_column": args.label_column},
        **classifier_to_dict(fit.classifier),
        "receipt": fit.receipt,
        "convergence": cert,
        "data": dataset_stats(ds),
    }
    emit(dumps(out), args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    doc = load_json(args.config, SYNTH_SCHEMA)
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    ds = _load_data(args).with_minority_positive()
    disc = Discretizer.from_dataset(ds, doc.get("bins", 10))
    rng = np.random.default_rng(seed)
    budget = PrivacyBudget(doc["epsilon"])
    out_ds, spent = end_to_end_private_balance(ds, disc, budget, doc["N"], doc.get("mode", "conditional"), rng)
    names = ds.meta.get("features")
    buf = io.StringIO()
    _write_csv(out_ds, names, args.label_column, buf)
    atomic_write(args.out, buf.getvalue())
    receipt = {
        "config": {**doc, "seed": seed, "data": str(args.data)},
        "receipt": {"private": True, "epsilon": spent.epsilon, "delta": spent.delta, "source": "synthesizer"},
        "rows": out_ds.n,
    }
    atomic_write(args.receipt or f"{args.out}.receipt.json", dumps(receipt))
    return EXIT_OK


def _write_csv(ds, names, label_column, fh) -> None:
    names = list(names or [f"x{j}" for j in range(ds.d)])
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([*names, label_column])
    for row, lab in zip(ds.X, ds.y):
        w.writerow([repr(float(v)) for v in row] + [int(lab)])


def cmd_preprocess(args) -> int:
    ds = _load_data(args).with_minority_positive()
    N = args.N if args.N is not None else max(ds.n0 - ds.n1, 0)
    if N < 0:
        raise UsageError("--N must be non-negative")
    if args.method == "oversample":
        out = oversample_deterministic(ds, N)
        factor = (-(-N // ds.n1) + 1) if N else 1
        adjustment = {"method": "oversample", "N": N, "n1": ds.n1, "epsilon_factor": factor, "delta_factor": factor}
    else:
        out = smote_augment(ds, N, args.k, np.random.default_rng(args.seed))
        adj = SmoteAdjustment(ds.d, args.k, ds.n1, N, args.gamma)
        adjustment = {
            "method": "smote", "N": N, "n1": ds.n1, "d": ds.d, "k": args.k, "gamma": args.gamma,
            "epsilon_factor_pure": adj.growth * adj.replication + 1.0,
            "epsilon_factor_approx": (1.0 + args.gamma) * adj.growth * adj.replication / args.k,
        }
    buf = io.StringIO()
    _write_csv(out, ds.meta.get("features"), args.label_column, buf)
    atomic_write(args.out, buf.getvalue())
    report = {
        "config": {"data": str(args.data), "method": args.method, "N": N, "k": args.k, "gamma": args.gamma, "seed": args.seed},
        "adjustment": adjustment,
        "rows": out.n,
    }
    atomic_write(args.receipt or f"{args.out}.receipt.json", dumps(report))
    return EXIT_OK


def cmd_warmup_sim(args) -> int:
    doc = load_json(args.config, WARMUP_SCHEMA)
    seed = args.seed if args.seed is not None else 0
    spec = MixtureSpec(doc["mu0"], doc["mu1"], doc["sigma"], doc.get("r_star", 1.0))
    n = doc.get("n", 100_000)
    rng = np.random.default_rng(seed)
    rows = []
    for gamma in doc.get("gammas", [0.25, 0.5, 0.75]):
        ana = analytic_metrics(spec, gamma).as_dict()
        pop = population_metrics(spec, gamma)
        sim = simulate_metrics(spec, gamma, n, rng)
        for metric in ("recall", "precision", "balanced_accuracy", "f1"):
            rows.append({
                "gamma": gamma, "metric": metric, "analytic": ana[metric], "population": pop[metric],
                "simulated": sim[metric], "abs_gap": abs(ana[metric] - sim[metric]),
            })
    gap = max(r["abs_gap"] for r in rows)
    for r in rows:
        r["max_abs_gap"] = gap
    report = {"config": {**doc, "seed": seed}, "table": rows}
    cov = doc.get("coverage")
    if cov:
        cspec = MixtureSpec(doc["mu0"], doc["mu1"], doc["sigma"], doc.get("r_star", 1.0), R=cov["R"])
        budget = PrivacyBudget(cov["epsilon"], cov["delta"])
        theta = cspec.theta(0.5)
        misses = 0
        for _ in range(cov["trials"]):
            ds = generate_1d_mixture(cspec, cov["n"], rng)
            clf, _ = private_boc(ds, cspec, budget, rng)
            bound = boc_error_bound(cspec, ds.n0, ds.ratio, budget, cov["beta"])
            misses += abs(clf.theta - theta) > bound
        report["coverage"] = {
            "trials": cov["trials"], "exceed": int(misses), "exceed_rate": misses / cov["trials"],
            "beta": cov["beta"], "within_beta": misses / cov["trials"] <= cov["beta"],
            "receipt": dp_core.compose_basic([budget, budget]).to_dict(),
        }
    if args.csv:
        fields = ["gamma", "metric", "analytic", "population", "simulated", "abs_gap", "max_abs_gap"]
        atomic_write(args.csv, rows_to_csv(rows, fields))
    emit(dumps(report), args.out)
    return EXIT_OK


def cmd_boundary(args) -> int:
    try:
        with open(args.model, encoding="utf-8") as fh:
            doc = json.load(fh)
        clf = classifier_from_dict(doc)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load model {args.model}: {exc}") from None
    res = args.resolution if args.ny is None else (args.resolution, args.ny)
    grid = boundary_grid(clf, args.x_range, args.y_range, res)
    emit(grid_to_csv(grid), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpimbalance", description="Private learning on imbalanced binary data.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("adjust-eps", help="epsilon inflation from oversampling and SMOTE")
    a.add_argument("--d", type=int, default=25)
    a.add_argument("--k", type=int, default=5)
    a.add_argument("--n1", type=int, default=1, help="minority count (with --N sets ceil(N/n1))")
    a.add_argument("--N", type=int, default=1, help="number of generated minority rows")
    a.add_argument("--gamma", type=float, default=0.0)
    a.add_argument("--eps-list", default="1,5,10", help="unadjusted input epsilons")
    a.add_argument("--target-eps", default=None, help="target epsilons for inverse mode")
    a.add_argument("--out")
    a.set_defaults(func=cmd_adjust_eps)

    r = sub.add_parser("run", help="multi-seed experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, help="overrides config master_seed")
    r.add_argument("--workers", type=int)
    r.add_argument("--out-csv")
    r.add_argument("--out-json")
    r.set_defaults(func=cmd_run)

    def data_flags(sp):
        sp.add_argument("--data", required=True, help="input CSV")
        sp.add_argument("--label-column", default="label")
        sp.add_argument("--bounds", help="JSON file mapping feature -> [lo, hi]")

    t = sub.add_parser("train", help="fit one pipeline on a CSV and write the model JSON")
    data_flags(t)
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("synth", help="private class-balanced synthetic data")
    data_flags(s)
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--receipt")
    s.set_defaults(func=cmd_synth)

    q = sub.add_parser("preprocess", help="oversample or SMOTE a CSV (non-private)")
    data_flags(q)
    q.add_argument("--method", choices=["oversample", "smote"], required=True)
    q.add_argument("--N", type=int, help="rows to add (default: n0 - n1)")
    q.add_argument("--k", type=int, default=5)
    q.add_argument("--gamma", type=float, default=0.0)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    q.add_argument("--receipt")
    q.set_defaults(func=cmd_preprocess)

    w = sub.add_parser("warmup-sim", help="analytic vs simulated metrics of the 1-d threshold rule")
    w.add_argument("--config", required=True)
    w.add_argument("--seed", type=int)
    w.add_argument("--out")
    w.add_argument("--csv")
    w.set_defaults(func=cmd_warmup_sim)

    b = sub.add_parser("bagging-audit", help="intrinsic privacy of non-private bagging")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--c", type=float)
    b.add_argument("--m", type=int)
    b.add_argument("--k-sub", type=int)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bagging_audit)

    g = sub.add_parser("boundary", help="prediction grid of a trained 2-feature model")
    g.add_argument("--model", required=True)
    g.add_argument("--x-range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    g.add_argument("--y-range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    g.add_argument("--resolution", type=int, default=100, help="grid points along x (and y unless --ny)")
    g.add_argument("--ny", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_boundary)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, ConvergenceError):
        return EXIT_CONVERGENCE
    if isinstance(exc, (BudgetError, PrivacyError)):
        return EXIT_BUDGET
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    return EXIT_DATA


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, StageError, ConvergenceError, PrivacyError, ConfigError, DataError,
            SamplingError, ValueError, OSError) as exc:
        code = _exit_code(exc)
        stage = exc.stage if isinstance(exc, StageError) else args.command
        print(f"dpimbalance {args.command}: [{stage}] {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
