"""Write a 6-feature stand-in with the mammography shape (n=11183, r=42) to data/r42.csv."""

import argparse
import json
from pathlib import Path

from dpimbalance.data import MixtureGenSpec, dataset_stats, generate_mixture_counts, save_csv

N0, N1 = 10923, 260
MEAN1 = (1.5, 1.0, 1.0, 0.75, 0.5, 0.25)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/r42.csv")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    spec = MixtureGenSpec(mean0=(0.0,) * 6, mean1=MEAN1, variances=1.0, seed=args.seed)
    ds = generate_mixture_counts(spec, N0, N1)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(ds, out, [f"f{j}" for j in range(6)])
    bounds = {f"f{j}": [float(lo), float(hi)] for j, (lo, hi) in enumerate(zip(ds.lower, ds.upper))}
    out.with_suffix(".bounds.json").write_text(json.dumps(bounds, indent=2) + "\n")
    print(json.dumps(dataset_stats(ds)))


if __name__ == "__main__":
    main()
