"""Leftmost-fragment lengths on a grid against the quadrature CDF, with a coupled half grid."""
import argparse
import json

import numpy as np

from fragkit.brownian import leftmost_lengths, rho_cdf
from fragkit.stats import ks_critical, ks_test, mean_se


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--log2m", type=int, default=20)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fine, coarse = leftmost_lengths(2 ** args.log2m, args.t, args.samples, np.random.default_rng(args.seed))
    ks = ks_test(fine, lambda x: rho_cdf(x, args.t))
    mf, sf = mean_se(fine)
    mc, sc = mean_se(coarse)
    print(json.dumps({"ks_statistic": ks.statistic, "p_value": ks.p_value, "critical_1pct": ks_critical(fine.size),
                      "mean_fine": mf, "se_fine": sf, "mean_half_grid": mc, "se_half_grid": sc}, indent=2))


if __name__ == "__main__":
    main()
