#!/usr/bin/env python3
"""Generate a dated synthetic corpus with planted persistent-noise episodes.

The output CSV feeds the `driftscan analyze` pipeline; the planted episode
metadata is written alongside it for validation.
"""

import argparse
import json
from pathlib import Path

from driftscan.montecarlo import build_synthetic_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output corpus CSV path")
    ap.add_argument("--days", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--plant-fraction", type=float, default=0.8)
    ap.add_argument("--jump-size", type=float, default=0.03)
    ap.add_argument("--theta-pn", type=float, default=0.25)
    ap.add_argument("--start-date", default="2018-06-01")
    args = ap.parse_args()

    planted = build_synthetic_corpus(
        args.out, days=args.days, master_seed=args.seed,
        plant_fraction=args.plant_fraction, jump_size=args.jump_size,
        theta_pn=args.theta_pn, start_date=args.start_date)
    meta_path = Path(args.out).with_suffix(".planted.json")
    meta_path.write_text(json.dumps(planted, indent=2, sort_keys=True))
    print(f"{args.days} days -> {args.out} ({len(planted)} planted episodes, "
          f"metadata in {meta_path})")


if __name__ == "__main__":
    main()
