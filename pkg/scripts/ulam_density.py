"""Ulam density of the Gauss map next to 1/((1+x) ln 2), and the L1 error against the bin count."""

import argparse
import csv
import math
import sys

import numpy as np

from cfdim.f_expansion import GaussDensity, cf_scheme, markov_obstruction_defect, ulam_invariant_density


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bins", type=int, nargs="+", default=[32, 64, 128, 256, 512, 1024])
    ap.add_argument("--profile", type=int, default=512, help="bin count whose density is printed")
    ap.add_argument("--branch-cap", type=int, default=4096)
    args = ap.parse_args()

    scheme = cf_scheme(args.branch_cap)
    exact = GaussDensity()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["bins", "l1_error", "rho0", "defect_branch1", "iterations", "tail_mass"])
    for n in args.bins:
        d = ulam_invariant_density(scheme, n)
        w.writerow([n, d.l1_distance(exact.value), d.values[0], markov_obstruction_defect(scheme, d, 1),
                    d.iterations, d.tail_mass])
    d = ulam_invariant_density(scheme, args.profile)
    x = (np.arange(d.bins) + 0.5) / d.bins
    w.writerow([])
    w.writerow(["x", "ulam", "exact"])
    for xi, v in zip(x, d.values):
        w.writerow([xi, v, 1 / ((1 + xi) * math.log(2))])


if __name__ == "__main__":
    main()
