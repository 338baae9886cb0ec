"""Overlap histogram of top-M sets and the profile scan over r."""
import argparse
import time

from prizecorr.simulation import SimConfig, overlap_experiment, profile_likelihood_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pool", type=int, default=2887)
    ap.add_argument("--winners", type=int, default=25)
    ap.add_argument("--r", type=float, default=0.63)
    ap.add_argument("--observed", type=int, default=5)
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--no-scan", action="store_true")
    args = ap.parse_args()

    t0 = time.perf_counter()
    cfg = SimConfig(args.pool, args.winners, args.r, replications=args.reps, seed=args.seed)
    res = overlap_experiment(cfg, workers=args.workers)
    print(f"r={args.r}  mean overlap {res.mean_overlap:.3f}  mode {res.mode}  "
          f"P(k={args.observed}) = {res.fraction(args.observed):.4f}  ({time.perf_counter() - t0:.1f}s)")
    for k, c in enumerate(res.histogram):
        if c:
            print(f"  k={k:2d}  {c / res.replications:.4f}")

    if args.no_scan:
        return
    t0 = time.perf_counter()
    scan = profile_likelihood_scan(args.pool, args.winners, args.observed, 0.50, 0.75, 0.01,
                                   args.reps, args.seed, workers=args.workers)
    best = max(scan, key=lambda t: t[1])
    print(f"\nprofile scan, P(k={args.observed} | r)  ({time.perf_counter() - t0:.1f}s)")
    for r, f in scan:
        print(f"  {r:.2f}  {f:.4f}{'  <- max' if r == best[0] else ''}")


if __name__ == "__main__":
    main()
