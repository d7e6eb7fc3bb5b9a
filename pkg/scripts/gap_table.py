"""Table of h, gamma and dim for the k-step Gauss chains against 1 - 2**(3-k)."""

import argparse
import csv
import sys

from cfdim.dimension import GapBudgets, verify_gap_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--outer-samples", type=int, default=10_000)
    ap.add_argument("--cap", type=int, default=10_000)
    args = ap.parse_args()

    budgets = GapBudgets(args.outer_samples, args.cap)
    w = None
    for k in args.ks:
        row = verify_gap_bound(k, budgets, args.seed, args.workers).to_dict()
        if w is None:
            w = csv.DictWriter(sys.stdout, fieldnames=list(row), lineterminator="\n")
            w.writeheader()
        w.writerow(row)
        sys.stdout.flush()


if __name__ == "__main__":
    main()
