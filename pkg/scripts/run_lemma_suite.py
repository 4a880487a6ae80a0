"""Empirical constants of the size and energy lemmas across window sizes.

    python3 scripts/run_lemma_suite.py --instances 300 --scales 3 6
"""

from __future__ import annotations

import argparse
import json
import sys

from walshbiest.harness import LEMMAS, lemma_suite


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=300)
    ap.add_argument("--scales", type=int, nargs="+", default=[3, 6])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--lemma", choices=LEMMAS, action="append")
    args = ap.parse_args(argv)

    rows = []
    for lemma in args.lemma or LEMMAS:
        for s in args.scales:
            r = lemma_suite(lemma, s, args.instances, args.seed)
            rows.append(r.to_json())
            print(f"{lemma:14s} window 2^{s}: C = {r.constant:.4g}", file=sys.stderr)
    json.dump({"config": vars(args), "results": rows}, sys.stdout, sort_keys=True, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
