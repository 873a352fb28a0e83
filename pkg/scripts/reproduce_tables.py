#!/usr/bin/env python3
"""Reproduce the three simulation-study tables (ARL, FDR, detection/EDD).

Each table prints the Monte Carlo estimate next to the matching asymptotic
value where one exists.  Full-size runs take a while; use --reps to trade
precision for time.
"""

import argparse
import math

from driftscan.detector import DetectorConfig
from driftscan.montecarlo import (McExperiment, db_config_annualized,
                                  paper_heston, run_arl, run_edd, run_fdr)
from driftscan.sim_paths import PnConfig
from driftscan.theory import arl_theory

N_1MIN = 390
W30 = 30          # minutes
R5 = 5


def _detector(xi, n, window_min=None, span_min=0.0, minutes=390.0):
    w_n = None if window_min is None else int(round(window_min * n / minutes))
    r_n = int(round(span_min * n / minutes))
    return DetectorConfig(xi=xi, delta_n=1.0 / n, w_n=w_n, r_n=r_n)


def table_arl(reps, seed, threads):
    print("=== ARL, 1-minute grid (observations) ===")
    print(f"{'xi':>4} {'variant':>8} {'mc_arl':>9} {'mc_se':>7} {'theory':>9}")
    heston = paper_heston()
    for xi in (3.4, 3.5, 3.6, 3.7, 3.8, 3.9, 4.0):
        for label, window, span in (("N", None, 0.0), ("N^w", W30, 0.0),
                                    ("N^ww", W30, R5)):
            det = _detector(xi, N_1MIN, window, span)
            exp = McExperiment(heston=heston, detector=det, n=N_1MIN,
                               replications=reps, master_seed=seed,
                               threads=threads)
            s = run_arl(exp)
            a = math.inf if window is None else det.w_n / xi ** 2
            th = arl_theory(xi, a) if span == 0.0 else float("nan")
            print(f"{xi:>4} {label:>8} {s.arl_mean:>9.1f} {s.arl_se:>7.1f} "
                  f"{th:>9.1f}")


def table_fdr(reps, seed, threads):
    print("=== FDR, one-day horizon, 1-minute grid ===")
    print(f"{'xi':>4} {'variant':>8} {'fdr':>8} {'se':>8}")
    heston = paper_heston()
    for xi in (3.5, 4.0, 4.5):
        for label, window, span in (("N", None, 0.0), ("N^w", W30, 0.0),
                                    ("N^ww", W30, R5)):
            det = _detector(xi, N_1MIN, window, span)
            exp = McExperiment(heston=heston, detector=det, n=N_1MIN,
                               replications=reps, master_seed=seed,
                               threads=threads)
            s = run_fdr(exp)
            print(f"{xi:>4} {label:>8} {s.fdr:>8.4f} {s.fdr_se:>8.4f}")


def table_edd(reps, seed, threads):
    print("=== Detection rate / EDD (observations), xi = 4.0 ===")
    print(f"{'model':>6} {'exp':>5} {'grid_s':>6} {'variant':>8} "
          f"{'rate':>7} {'edd':>8}")
    heston = paper_heston()
    cases = [
        ("db", 0.55, 60, "N^w"), ("db", 0.65, 60, "N^w"),
        ("db", 0.75, 60, "N^w"), ("db", 0.75, 10, "N^w"),
        ("pn", 0.45, 30, "N^ww"), ("pn", 0.35, 30, "N^ww"),
        ("pn", 0.25, 30, "N^ww"), ("pn", 0.35, 60, "N^ww"),
        ("pn", 0.25, 60, "N^ww"), ("pn", 0.25, 10, "N^ww"),
    ]
    for model, exponent, grid_s, variant in cases:
        n = int(round(390 * 60 / grid_s))
        span = R5 if variant == "N^ww" else 0.0
        det = _detector(4.0, n, W30, span)
        if model == "db":
            cont = db_config_annualized(3.0, theta_db=exponent)
        else:
            cont = PnConfig(jump_size=0.02, theta_pn=exponent)
        exp = McExperiment(heston=heston, detector=det, n=n,
                           replications=reps, master_seed=seed,
                           contamination=cont, threads=threads)
        s = run_edd(exp)
        print(f"{model:>6} {exponent:>5} {grid_s:>6} {variant:>8} "
              f"{s.detection_rate:>7.3f} {s.edd_mean:>8.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--table", choices=("arl", "fdr", "edd", "all"),
                    default="all")
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--fdr-reps", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=8)
    args = ap.parse_args()
    if args.table in ("arl", "all"):
        table_arl(args.reps, args.seed, args.threads)
    if args.table in ("fdr", "all"):
        table_fdr(args.fdr_reps, args.seed, args.threads)
    if args.table in ("edd", "all"):
        table_edd(args.reps, args.seed, args.threads)


if __name__ == "__main__":
    main()
