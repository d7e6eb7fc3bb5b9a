"""Deviation probabilities of the digit-1 frequency against n, per subsequence, with the exponential fit."""

import argparse
import csv
import sys

from cfdim.deviations import SubsequenceSpec, decay_rate_fit, deviation_series
from cfdim.errors import InsufficientData


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--q", nargs="+", default=["identity", "arith:2", "arith:3"])
    ap.add_argument("--word", type=int, nargs="+", default=[1])
    ap.add_argument("--delta", type=float, default=0.2)
    ap.add_argument("--ns", type=int, nargs="+", default=[10, 25, 50, 75, 100, 150, 200])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["q", "n", "estimate", "stderr", "samples", "fit_slope", "fit_r2"])
    for text in args.q:
        s = deviation_series(args.word, SubsequenceSpec.parse(text), args.delta, args.ns, args.samples,
                             args.seed, args.workers)
        try:
            fit = decay_rate_fit(s)
            slope, r2 = fit.slope, fit.r_squared
        except InsufficientData:
            slope = r2 = ""
        for n, p, se, m in s.entries:
            w.writerow([text, n, p, se, m, slope, r2])


if __name__ == "__main__":
    main()
