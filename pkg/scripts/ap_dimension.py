"""Covering-number dimension estimates for Brownian excursion fragmentation states."""
import argparse
import json

import numpy as np

from fragkit.brownian import ap_state, sample_excursion
from fragkit.dimension import average_stats, covering_bound_holds, covering_stats, estimate_dimension


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--log2m", type=int, default=20)
    ap.add_argument("--excursions", type=int, default=20)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    eps = 2.0 ** -np.arange(6, 15)
    items = [covering_stats(ap_state(sample_excursion(2 ** args.log2m, rng), args.t), eps)
             for _ in range(args.excursions)]
    est = estimate_dimension(average_stats(items), (eps.min(), eps.max()))
    out = est.to_dict() | {"covering_bound_ok": all(covering_bound_holds(c).all() for c in items)}
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
