"""Thresholds, exceedance inversions and likelihood estimates for the bundled descriptors."""
import warnings

from prizecorr.descriptor import BUNDLED, PlaceholderRanksWarning, bundled_path, parse_descriptor
from prizecorr.inference import derive_thresholds, infer_by_exceedance, mle, posterior
from prizecorr.tail_model import invert_exceedance_for_r, tail_exceedance, TailCondition


def main():
    warnings.simplefilter("ignore", PlaceholderRanksWarning)
    print(f"{'name':8} {'x_c':>7} {'y_c':>7} {'exceed':>8} {'mle':>7} {'mode':>7}  interval")
    for name in BUNDLED:
        ds = parse_descriptor(bundled_path(name))
        x_c, y_c = derive_thresholds(ds)
        ex = infer_by_exceedance(ds)
        ml = mle(ds, 0.001)
        _, post = posterior(ds, 0.001)
        print(f"{name:8} {x_c:7.4f} {(y_c if y_c is not None else float('nan')):7.4f} "
              f"{ex.r_hat:8.4f} {ml.r_hat:7.4f} {post.r_hat:7.4f}  "
              f"[{post.ci_low:.3f}, {post.ci_high:.3f}]")

    # rounded thresholds as usually quoted
    print()
    print("inversion at rounded thresholds")
    print(f"  5 of 25 above 2.38 given x > 2.38      r = {invert_exceedance_for_r(2.38, 2.38, 5 / 25):.4f}")
    print(f"  6 of 22 above 2.35 given x > 3.51      r = {invert_exceedance_for_r(2.35, 3.51, 6 / 22):.4f}")
    print(f"  exceedance at r=0.63, x_c=y_c=2.38     p = {tail_exceedance(2.38, TailCondition(0.63, 2.38)):.5f}")


if __name__ == "__main__":
    main()
