#!/usr/bin/env python3
"""Wall-clock comparison of the step-size transforms.

Times n evaluations of each transform at a fixed argument and threshold
(median of several repetitions) and writes a phi,evals,seconds CSV.
Absolute numbers are hardware- and vectorization-specific.
"""

import argparse
import sys

from nslmm import phi_benchmark


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-evals", type=int, default=10 ** 8)
    ap.add_argument("--x", type=float, default=0.1)
    ap.add_argument("--bound", type=float, default=0.1)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    report = phi_benchmark(n_evals=args.n_evals, x=args.x, bound=args.bound,
                           reps=args.reps)
    text = report.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
