"""Ratio of the trilinear sum to its size/energy bound as the collection grows.

    python3 scripts/run_abstract.py --sizes 50 100 200 400 --instances 1000
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from walshbiest.checks import abstract_ratios


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--instances", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--theta", default="1/3,1/3,1/3")
    args = ap.parse_args(argv)

    theta = tuple(Fraction(t) for t in args.theta.split(","))
    summary = {}
    for N in args.sizes:
        r = np.array(abstract_ratios(N, args.instances, args.seed, theta))
        summary[str(N)] = {"max": float(r.max()), "median": float(np.median(r)),
                           "p99": float(np.quantile(r, 0.99))}
        print(f"N={N}: max {r.max():.4g}  median {np.median(r):.4g}", file=sys.stderr)
    json.dump({"config": vars(args), "ratios": summary}, sys.stdout, sort_keys=True, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
