"""Print the SMOTE budget table (d=25, k=5, ceil(N/n1)=1) next to the published values."""

import argparse

from dpimbalance import dp_core
from dpimbalance.dp_core import SmoteAdjustment

PUBLISHED_FORWARD = {1.0: 213.21, 5.0: 1066.06, 10.0: 2132.1}
PUBLISHED_INVERSE = {1.0: 0.00469, 5.0: 0.02346, 10.0: 0.04692}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=25)
    ap.add_argument("--k", type=int, default=5)
    args = ap.parse_args()
    adj = SmoteAdjustment(args.d, args.k, n1=1, N=1)
    print(f"{'eps':>6} {'approx':>12} {'pure':>12} {'published':>10} {'rel gap':>8}")
    for eps, pub in PUBLISHED_FORWARD.items():
        approx = dp_core.smote_adjusted_budget_approx(eps, adj).epsilon
        pure = dp_core.smote_adjusted_epsilon_pure(eps, adj)
        print(f"{eps:6g} {approx:12.2f} {pure:12.2f} {pub:10.2f} {(approx - pub) / pub:8.4f}")
    print(f"\n{'target':>6} {'approx':>12} {'pure':>12} {'published':>10} {'rel gap':>8}")
    for eps, pub in PUBLISHED_INVERSE.items():
        approx = dp_core.smote_required_epsilon_approx(eps, adj)
        pure = dp_core.smote_required_epsilon_pure(eps, adj)
        print(f"{eps:6g} {approx:12.5f} {pure:12.6f} {pub:10.5f} {(approx - pub) / pub:8.4f}")


if __name__ == "__main__":
    main()
