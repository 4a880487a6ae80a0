"""Run a restricted-type experiment from a JSON config.

    python3 scripts/run_restricted_type.py scripts/configs/a5_a12.json --out-dir results/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from walshbiest.harness import Experiment, report_json, restricted_type_experiment


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", type=Path)
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--jobs", type=int, default=None, help="override the config's worker count")
    args = ap.parse_args(argv)

    cfg = json.loads(args.config.read_text())
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    exp = Experiment.from_json(cfg)

    def progress(r):
        print(f"scale {r.scale} trial {r.trial}: ratio {r.ratio}", file=sys.stderr)

    rep = restricted_type_experiment(exp, progress)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.config.stem
    (args.out_dir / f"{stem}.json").write_text(report_json(rep.to_json()) + "\n")
    (args.out_dir / f"{stem}.csv").write_text(rep.to_csv())
    for s, r in sorted(rep.max_ratio.items()):
        print(f"scale {s}: max ratio {r:.4g}")
    print(f"slope {rep.slope:+.4f}  audits {'ok' if rep.audits_ok else 'FAILED'}")
    return 0 if rep.audits_ok else 1


if __name__ == "__main__":
    sys.exit(main())
