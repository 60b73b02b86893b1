"""One-step versus two-step Poisson-Dirichlet shattering, with a negative control."""
import argparse
import json

import numpy as np

from fragkit.ruelle import semigroup_consistency


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--times", default="0.1,0.25,0.4", help="t0,t1,t2")
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--sticks", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t0, t1, t2 = (float(x) for x in args.times.split(","))
    rep = semigroup_consistency(t0, t1, t2, args.sticks, args.reps, np.random.default_rng(args.seed))
    print(json.dumps(rep.to_dict(), indent=2))


if __name__ == "__main__":
    main()
