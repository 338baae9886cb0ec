"""TPR - FPR under the mixture coupling, as a function of the sieve size.

The mixture copies the rating into the score with probability r, so with
fixed thresholds TPR - FPR equals r. In finite pools the sieve boundary moves
with the sample, and the mean falls short of r by an amount that shrinks like
1/sqrt(M).
"""
import argparse
import math

import numpy as np

from prizecorr.simulation import SimConfig, roc_and_phi, sample_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=float, default=0.4)
    ap.add_argument("--frac", type=float, default=0.01, help="winner fraction M/N")
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    print(f"{'N':>8} {'M':>6} {'mean':>8} {'dev':>8} {'3 SE':>7} {'dev*sqrt(M)':>11}")
    for n in (10_000, 100_000, 1_000_000):
        m = int(round(args.frac * n))
        reps = max(20, args.reps * 10_000 // n)
        cfg = SimConfig(n, m, args.r, "mixture", reps, args.seed)
        g = np.array([roc_and_phi(*sample_pairs(cfg, i), m, m).tpr_minus_fpr for i in range(reps)])
        dev = g.mean() - args.r
        se = g.std(ddof=1) / math.sqrt(reps)
        print(f"{n:8d} {m:6d} {g.mean():8.4f} {dev:8.4f} {3 * se:7.4f} {dev * math.sqrt(m):11.3f}")


if __name__ == "__main__":
    main()
