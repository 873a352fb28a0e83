"""Command-line entry point.

Subcommands: simulate, detect, theory, mc-arl, mc-fdr, mc-edd, analyze.
Options may come from a YAML config file (--config) with flags taking
precedence; every output CSV starts with comment lines echoing the
effective configuration, so identical argv + files reproduce byte-identical
outputs.

Exit codes: 0 success, 2 usage error, 3 unreadable/missing file,
4 invariant violation (bad configuration or data).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .detector import DetectorConfig, identify_regions, scan_day, truncation_scale
from .errors import ConfigError, DataError, DriftscanError
from .ingest import analyze_corpus, load_corpus
from .montecarlo import (McExperiment, db_config_annualized, run_arl,
                         run_edd, run_fdr)
from .sim_paths import (DbConfig, HestonConfig, PnConfig, SimulatedDay,
                        days_to_csv, simulate_days)
from . import theory

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_INVARIANT = 4

MINUTES_PER_DAY = 390.0


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config file {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must be a mapping of sections")
    return data


def _merge(file_section: dict, **flag_values):
    """Flags override file values; None flags fall back to the file."""
    out = dict(file_section or {})
    for key, val in flag_values.items():
        if val is not None:
            out[key] = val
    return out


def _minutes_to_obs(minutes, n):
    return int(round(minutes * n / MINUTES_PER_DAY))


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


# destination flags are excluded from the config echo so the same run
# written to different paths stays byte-identical
_NON_CONFIG_KEYS = ("func", "out", "out_alarms", "out_regions", "out_dir",
                    "samples_out")


def _header(args, extra=()):
    flags = {k: v for k, v in sorted(vars(args).items())
             if k not in _NON_CONFIG_KEYS and v is not None}
    lines = [f"driftscan {__version__}",
             f"config: {flags}"]
    lines.extend(extra)
    return lines


def _write_rows(fh, header_lines, columns, rows):
    for line in header_lines:
        fh.write(f"# {line}\n")
    fh.write(",".join(columns) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _heston_from(args, file_cfg):
    sect = _merge(file_cfg.get("heston", {}),
                  kappa=args.kappa, theta=args.theta, vov=args.vov,
                  rho=args.rho, jump_intensity=args.jump_intensity,
                  jump_sd=args.jump_sd)
    return HestonConfig(**sect)


def _contamination_from(args, file_cfg):
    model = args.model or file_cfg.get("model", "none")
    if model == "none":
        return None
    if model == "db":
        sect = _merge(file_cfg.get("db", {}), tau=args.tau,
                      tau_bar=args.tau_bar, theta_db=args.exponent)
        c_annual = args.burst_scale if args.burst_scale is not None \
            else sect.pop("c_annual", 3.0)
        sect.pop("c", None)
        return db_config_annualized(c_annual, **sect)
    if model == "pn":
        sect = _merge(file_cfg.get("pn", {}), tau=args.tau,
                      tau_bar=args.tau_bar, theta_pn=args.exponent,
                      jump_size=args.jump_size, eta=args.eta)
        sect.setdefault("jump_size", 0.02)
        return PnConfig(**sect)
    raise ConfigError(f"unknown contamination model {model!r}")


def _detector_from(args, file_cfg, n, zeta=None):
    sect = _merge(file_cfg.get("detector", {}),
                  xi=args.xi, varpi=args.varpi, warmup=args.warmup)
    window_min = args.window_min if args.window_min is not None \
        else sect.pop("window_min", None)
    span_min = args.min_span_min if args.min_span_min is not None \
        else sect.pop("min_span_min", 0.0)
    w_n = None if window_min is None else _minutes_to_obs(window_min, n)
    r_n = _minutes_to_obs(span_min, n)
    sect.setdefault("warmup", 0)
    if sect.get("warmup") is None:
        sect["warmup"] = 0
    if "xi" not in sect:
        raise ConfigError("threshold xi is required (flag --xi or config)")
    return DetectorConfig(delta_n=1.0 / n, w_n=w_n, r_n=r_n, zeta=zeta,
                          **sect)


# ---------------------------------------------------------------- commands

def cmd_simulate(args):
    file_cfg = _load_config_file(args.config)
    heston = _heston_from(args, file_cfg)
    contamination = _contamination_from(args, file_cfg)
    days = simulate_days(heston, args.n, args.days, args.seed,
                         contamination=contamination,
                         proxy_noise=args.proxy_noise)
    fh, close = _open_out(args.out)
    try:
        days_to_csv(days, fh, header_lines=_header(args))
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_detect(args):
    file_cfg = _load_config_file(args.config)
    days, diagnostics = load_corpus(args.input,
                                    minutes_per_day=args.minutes_per_day)
    for day_id, reason in diagnostics:
        print(f"# skipped day {day_id}: {reason}", file=sys.stderr)
    alarm_rows, region_rows = [], []
    prev_sv = None
    for day in days:
        n = day.path.n
        if args.zeta is not None:
            zeta = args.zeta
        else:
            zeta = truncation_scale(prev_sv if prev_sv is not None else day.sv)
        cfg = _detector_from(args, file_cfg, n, zeta=zeta)
        for ev in scan_day(day.path, day.sv, cfg):
            wall_minute = ev.l / n * day.minutes_per_day
            alarm_rows.append((day.day_id, ev.l, ev.k_star, ev.statistic,
                               wall_minute))
        for reg in identify_regions(day.path, day.sv, cfg,
                                    minutes_per_day=day.minutes_per_day):
            region_rows.append((day.day_id, reg.start, reg.end,
                                reg.duration_min, reg.peak_stat))
        prev_sv = day.sv
    hdr = _header(args)
    fh, close = _open_out(args.out_alarms)
    try:
        _write_rows(fh, hdr, ("day", "l", "k_star", "statistic", "wall_minute"),
                    alarm_rows)
    finally:
        if close:
            fh.close()
    if args.out_regions:
        with open(args.out_regions, "w") as fh:
            _write_rows(fh, hdr, ("day", "start_index", "end_index",
                                  "duration_min", "peak_stat"), region_rows)
    return EXIT_OK


def cmd_theory(args):
    if args.xi is None and args.x is None:
        raise ConfigError("theory needs --xi and/or --x")
    mode = args.nu
    rows = []
    if args.x is not None:
        fn = theory.nu_exact if mode == "exact" else theory.nu_approx
        rows.append(("nu", f"x={args.x}", fn(args.x), mode))
    if args.xi is not None:
        if args.window_min is not None:
            w_n = _minutes_to_obs(args.window_min, args.obs_per_day)
            a = w_n / args.xi ** 2
            a_label = f"a={a:.6g}"
        else:
            a = math.inf
            a_label = "a=inf"
        rows.append(("arl", f"xi={args.xi};{a_label}",
                     theory.arl_theory(args.xi, a, mode), mode))
        if args.ell is not None:
            bound = theory.fdr_theory(args.xi, a, args.ell, mode)
            rows.append(("fdr_linear", f"xi={args.xi};{a_label};ell={args.ell}",
                         bound.linear, mode))
            rows.append(("fdr_exponential",
                         f"xi={args.xi};{a_label};ell={args.ell}",
                         bound.exponential, mode))
        if args.mu is not None:
            rows.append(("edd", f"xi={args.xi};mu={args.mu}",
                         theory.edd_closed_form(args.xi, args.mu), mode))
    fh, close = _open_out(args.out)
    try:
        _write_rows(fh, _header(args), ("quantity", "inputs", "value", "mode"),
                    rows)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def _mc_experiment(args, contamination=None):
    file_cfg = _load_config_file(args.config)
    heston = _heston_from(args, file_cfg)
    det = _detector_from(args, file_cfg, args.obs_per_day)
    return McExperiment(heston=heston, detector=det, n=args.obs_per_day,
                        replications=args.reps, master_seed=args.seed,
                        contamination=contamination,
                        max_days_per_rep=args.cap_days,
                        threads=args.threads)


def _write_mc(args, summary, estimates):
    hdr = _header(args, extra=[f"warning: {summary.warning}"]
                  if summary.warning else ())
    fh, close = _open_out(args.out)
    try:
        _write_rows(fh, hdr, ("quantity", "value"), estimates)
    finally:
        if close:
            fh.close()
    if getattr(args, "samples_out", None):
        with open(args.samples_out, "w") as fh:
            _write_rows(fh, hdr, ("sample",),
                        [(float(s),) for s in summary.samples])


def cmd_mc_arl(args):
    summary = run_arl(_mc_experiment(args))
    _write_mc(args, summary, [
        ("arl_mean", summary.arl_mean), ("arl_se", summary.arl_se),
        ("replications", summary.replications),
        ("n_capped", summary.n_capped)])
    return EXIT_OK


def cmd_mc_fdr(args):
    summary = run_fdr(_mc_experiment(args), ell=args.ell)
    _write_mc(args, summary, [
        ("fdr", summary.fdr), ("fdr_se", summary.fdr_se),
        ("replications", summary.replications)])
    return EXIT_OK


def cmd_mc_edd(args):
    file_cfg = _load_config_file(args.config)
    contamination = _contamination_from(args, file_cfg)
    if contamination is None:
        raise ConfigError("mc-edd requires --model db or --model pn")
    summary = run_edd(_mc_experiment(args, contamination))
    _write_mc(args, summary, [
        ("detection_rate", summary.detection_rate),
        ("edd_mean_obs", summary.edd_mean), ("edd_se", summary.edd_se),
        ("n_false", summary.n_false),
        ("replications", summary.replications)])
    return EXIT_OK


def cmd_analyze(args):
    days, diagnostics = load_corpus(args.input,
                                    minutes_per_day=args.minutes_per_day)
    exclude = ()
    if args.exclude_dates:
        with open(args.exclude_dates) as fh:
            exclude = tuple(line.strip() for line in fh if line.strip())
    report = analyze_corpus(
        days, xi=args.xi, window_min=args.window_min or 30.0,
        min_span_min=args.min_span_min if args.min_span_min is not None else 5.0,
        varpi=args.varpi or 0.49, horizon_min=args.horizon_min,
        bin_width_min=args.bin_width_min, exclude_days=exclude,
        region_rule=args.region_rule)
    for day_id, reason in diagnostics:
        print(f"# skipped day {day_id}: {reason}", file=sys.stderr)
    hdr = _header(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "regions.csv", "w") as fh:
        rows = [(day_id, r.start, r.end, r.duration_min, r.peak_stat)
                for day_id, regs in report.regions_by_day.items()
                for r in regs]
        _write_rows(fh, hdr, ("day", "start_index", "end_index",
                              "duration_min", "peak_stat"), rows)
    with open(out_dir / "blocks.csv", "w") as fh:
        _write_rows(fh, hdr, ("block", "count"),
                    list(report.block_counts.items()))
    with open(out_dir / "histogram.csv", "w") as fh:
        edges = report.histogram["edges"]
        rows = [(f"[{edges[i]:g},{edges[i + 1]:g})",
                 int(report.histogram["overall"][i]),
                 *(int(report.histogram[name][i]) for name in
                   ("Morning", "Noon", "Afternoon")))
                for i in range(len(edges) - 1)]
        _write_rows(fh, hdr, ("duration_bin_min", "all", "morning", "noon",
                              "afternoon"), rows)
    with open(out_dir / "yearly.csv", "w") as fh:
        _write_rows(fh, hdr, ("year", "count"), list(report.yearly.items()))
    with open(out_dir / "comparison.csv", "w") as fh:
        rows = [(label, row["tv_before"], row["sv_before"], row["tv_after"],
                 row["sv_after"]) for label, row in report.vol_rows]
        _write_rows(fh, hdr, ("subset", "tv_before", "sv_before", "tv_after",
                              "sv_after"), rows)
    print(f"{report.total_regions} regions across "
          f"{len(report.regions_by_day)} analyzed days -> {out_dir}")
    return EXIT_OK


# ----------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--config", help="YAML config file; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")


def _add_heston_flags(p):
    p.add_argument("--kappa", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--vov", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--jump-intensity", type=float, dest="jump_intensity")
    p.add_argument("--jump-sd", type=float, dest="jump_sd")


def _add_detector_flags(p):
    p.add_argument("--xi", type=float)
    p.add_argument("--window-min", type=float, dest="window_min",
                   help="max window in minutes (omit for unbounded)")
    p.add_argument("--min-span-min", type=float, dest="min_span_min",
                   help="min window span in minutes (default 0)")
    p.add_argument("--varpi", type=float)
    p.add_argument("--warmup", type=int)


def _add_contamination_flags(p):
    p.add_argument("--model", choices=("none", "db", "pn"))
    p.add_argument("--exponent", type=float,
                   help="theta_db (db) or theta_pn (pn)")
    p.add_argument("--burst-scale", type=float, dest="burst_scale",
                   help="annualized drift-burst scale (db)")
    p.add_argument("--jump-size", type=float, dest="jump_size",
                   help="efficient-price jump (pn), log units")
    p.add_argument("--eta", type=float, help="pn response multiplier")
    p.add_argument("--tau", type=float)
    p.add_argument("--tau-bar", type=float, dest="tau_bar")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="driftscan",
        description="Real-time GLR-CUSUM detection of local semimartingale "
                    "violations in high-frequency prices")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate daily price paths to CSV")
    _add_common(p)
    _add_heston_flags(p)
    _add_contamination_flags(p)
    p.add_argument("--days", type=int, default=1)
    p.add_argument("--n", type=int, default=390, help="observations per day")
    p.add_argument("--proxy-noise", type=float, default=0.02,
                   dest="proxy_noise")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="run the detector over a corpus CSV")
    _add_common(p)
    _add_detector_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--zeta", type=float,
                   help="fixed truncation scale (default: 4 x previous-day "
                        "spot-vol median)")
    p.add_argument("--minutes-per-day", type=float, default=MINUTES_PER_DAY,
                   dest="minutes_per_day")
    p.add_argument("--out-alarms", dest="out_alarms")
    p.add_argument("--out-regions", dest="out_regions")
    p.set_defaults(func=cmd_detect, out_alarms=None)

    p = sub.add_parser("theory", help="evaluate asymptotic quantities")
    _add_common(p)
    p.add_argument("--xi", type=float)
    p.add_argument("--x", type=float, help="evaluate nu at this point")
    p.add_argument("--nu", choices=("exact", "approx"), default="exact")
    p.add_argument("--window-min", type=float, dest="window_min")
    p.add_argument("--obs-per-day", type=int, default=390, dest="obs_per_day")
    p.add_argument("--ell", type=float, help="FDR horizon in observations")
    p.add_argument("--mu", type=float, help="post-change drift for EDD")
    p.set_defaults(func=cmd_theory)

    for name, fn in (("mc-arl", cmd_mc_arl), ("mc-fdr", cmd_mc_fdr),
                     ("mc-edd", cmd_mc_edd)):
        p = sub.add_parser(name, help=f"Monte Carlo {name[3:].upper()} run")
        _add_common(p)
        _add_heston_flags(p)
        _add_detector_flags(p)
        p.add_argument("--reps", type=int, default=1000)
        p.add_argument("--obs-per-day", type=int, default=390,
                       dest="obs_per_day")
        p.add_argument("--cap-days", type=int, default=30, dest="cap_days")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--samples-out", dest="samples_out",
                       help="write raw stopping-time samples")
        if name == "mc-fdr":
            p.add_argument("--ell", type=int,
                           help="observations per trial (default: one day)")
        if name == "mc-edd":
            _add_contamination_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("analyze", help="full empirical pipeline over a corpus")
    _add_common(p)
    _add_detector_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", default="analysis_out", dest="out_dir")
    p.add_argument("--minutes-per-day", type=float, default=MINUTES_PER_DAY,
                   dest="minutes_per_day")
    p.add_argument("--horizon-min", type=float, default=60.0,
                   dest="horizon_min")
    p.add_argument("--bin-width-min", type=float, default=5.0,
                   dest="bin_width_min")
    p.add_argument("--exclude-dates", dest="exclude_dates",
                   help="file with one ISO date per line to exclude")
    p.add_argument("--region-rule", choices=("union", "argmax"),
                   default="union", dest="region_rule")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file: {exc}", file=sys.stderr)
        return EXIT_FILE
    except (ConfigError, DataError, DriftscanError, ValueError) as exc:
        print(f"error: invariant: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
