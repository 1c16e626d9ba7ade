"""Seed-averaged comparisons behind the trend checks, for several ridge strengths.

Prints mean recall and G-mean per method on the mixture and on the r=42
subsample of data/r42.csv, plus whether each trend holds.
"""

import argparse
import json
import warnings
from pathlib import Path

from dpimbalance.evaluation import ExperimentConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def methods(lam):
    p = {"lam": lam}
    return [
        {"name": "LR", "trainer": "baseline", "params": p},
        {"name": "ERM", "trainer": "erm", "params": p},
        {"name": "ERM-w", "trainer": "erm-weighted", "params": p},
        {"name": "SMOTE-adj", "preprocess": "smote", "trainer": "erm", "budget_mode": "adjusted", "params": p},
        {"name": "Synth", "preprocess": "synth", "trainer": "baseline", "params": p},
        {"name": "Bagging", "trainer": "bagging", "params": {**p, "m": 25}},
    ]


def datasets():
    bounds = json.loads((ROOT / "data" / "r42.bounds.json").read_text())
    return {
        "mixture": {"kind": "mixture", "n": 1000, "p1": 0.1, "seed": 0},
        "r42": {"kind": "csv", "path": str(ROOT / "data" / "r42.csv"), "label_column": "label",
                "bounds": bounds, "subsample_ratio": 42, "subsample_n": 4300},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lams", default="1e-2,1e-3,1e-4")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--epsilon", type=float, default=1.0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    for lam in (float(v) for v in args.lams.split(",")):
        for name, src in datasets().items():
            cfg = ExperimentConfig(dataset=src, methods=methods(lam), epsilons=[args.epsilon],
                                   seeds=args.seeds, workers=args.workers)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = run_experiment(cfg)
            rep = {m.name: res.report(m.name, args.epsilon) for m in cfg.methods}
            print(f"lambda={lam:g} dataset={name}")
            for m, r in rep.items():
                print(f"  {m:10s} recall {r.mean('recall'):.3f}  g_mean {r.mean('g_mean'):.3f}  auc {r.mean('auc'):.3f}")
            a = rep["ERM-w"].mean("recall") >= rep["ERM"].mean("recall")
            b = rep["Synth"].mean("g_mean") > rep["SMOTE-adj"].mean("g_mean")
            c = rep["Bagging"].mean("recall") <= rep["ERM"].mean("recall")
            print(f"  trends: weighted>=unweighted {a}, synth>smote {b}, bagging<=single {c}")


if __name__ == "__main__":
    main()
