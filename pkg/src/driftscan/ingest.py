"""Corpus loading and the empirical region-analysis pipeline.

A corpus is a CSV of per-day price grids with an optional spot-vol column.
For each day we compute a rolling truncated realized volatility (TV),
rescale the supplied spot vol (SV) to the previous day's TV level, run
region identification, and aggregate counts, durations, yearly totals and
TV/SV comparisons around episode starts.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .detector import (DetectorConfig, ViolationRegion, identify_regions,
                       truncation_scale)
from .errors import ConfigError, DataError, ParseError
from .sim_paths import PricePath, SpotVolSeries

DEFAULT_BLOCKS = (0.0, 130.0, 260.0, 390.0)
BLOCK_NAMES = ("Morning", "Noon", "Afternoon")


@dataclass
class TradingDay:
    """One session: price grid, optional spot vol, session metadata."""

    day_id: object
    path: PricePath
    sv: SpotVolSeries | None = None
    minutes_per_day: float = 390.0

    @property
    def date(self) -> dt.date | None:
        if isinstance(self.day_id, dt.date):
            return self.day_id
        try:
            return dt.date.fromisoformat(str(self.day_id))
        except ValueError:
            return None


@dataclass
class CorpusReport:
    """Aggregated outputs of the analysis pipeline."""

    regions_by_day: dict = field(default_factory=dict)
    block_counts: dict = field(default_factory=dict)
    histogram: dict = field(default_factory=dict)
    yearly: dict = field(default_factory=dict)
    vol_rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def total_regions(self) -> int:
        return sum(len(v) for v in self.regions_by_day.values())


def _read_csv(path) -> pd.DataFrame:
    try:
        # round_trip parsing keeps repr-formatted doubles bit-exact
        return pd.read_csv(path, comment="#", float_precision="round_trip")
    except FileNotFoundError:
        raise
    except (OSError, pd.errors.ParserError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def load_corpus(source, minutes_per_day: float | None = 390.0,
                require_sv: bool = True):
    """Load TradingDays from a CSV file or a directory of CSV files.

    Accepted columns: ``day``, ``index``, and either ``log_price`` or
    ``price`` (converted by natural log), plus ``spot_vol``.  Simulator
    output (``log_price_observed`` / ``spot_vol_proxy``) is also accepted.
    Days with gaps, non-finite values, or (when ``minutes_per_day`` is set)
    an unexpected grid length are rejected with per-day diagnostics.

    Returns (days sorted by day id, diagnostics list).
    """
    src = Path(source)
    files = sorted(src.glob("*.csv")) if src.is_dir() else [src]
    frames = [_read_csv(f) for f in files]
    df = pd.concat(frames, ignore_index=True) if len(frames) > 1 else frames[0]

    if "log_price" in df.columns:
        price_col, log_already = "log_price", True
    elif "log_price_observed" in df.columns:
        price_col, log_already = "log_price_observed", True
    elif "price" in df.columns:
        price_col, log_already = "price", False
    else:
        raise ParseError("no price column (expected log_price or price)")
    sv_col = next((c for c in ("spot_vol", "spot_vol_proxy") if c in df.columns),
                  None)
    if sv_col is None and require_sv:
        raise DataError("missing spot_vol column (pass require_sv=False to "
                        "proceed without it)")
    for col in ("day", "index"):
        if col not in df.columns:
            raise ParseError(f"missing required column {col!r}")

    days, diagnostics = [], []
    for day_id, grp in df.groupby("day", sort=True):
        grp = grp.sort_values("index")
        idx = grp["index"].to_numpy()
        prices = grp[price_col].to_numpy(dtype=float)
        reason = None
        if not np.array_equal(idx, np.arange(len(idx))):
            reason = "grid has gaps or duplicate indices"
        elif not np.all(np.isfinite(prices)):
            reason = "non-finite price values"
        elif len(prices) < 3:
            reason = "too few rows"
        elif minutes_per_day is not None and len(prices) not in (
                int(minutes_per_day), int(minutes_per_day) + 1):
            reason = (f"{len(prices)} rows; expected a "
                      f"{int(minutes_per_day)}-minute session")
        if reason is None and sv_col is not None:
            sv_vals = grp[sv_col].to_numpy(dtype=float)
            if not np.all(np.isfinite(sv_vals)) or np.any(sv_vals < 0):
                reason = "invalid spot_vol values"
        if reason is not None:
            diagnostics.append((day_id, reason))
            continue
        logp = prices if log_already else np.log(prices)
        n = len(logp) - 1
        path = PricePath(delta_n=1.0 / n, log_prices=logp)
        sv = None
        if sv_col is not None:
            sv = SpotVolSeries(delta_n=1.0 / n,
                               values=grp[sv_col].to_numpy(dtype=float))
        days.append(TradingDay(day_id=day_id, path=path, sv=sv,
                               minutes_per_day=minutes_per_day or 390.0))
    if not days:
        raise DataError("empty corpus: no valid trading day survived loading")
    return days, diagnostics


def rolling_tv(day: TradingDay, window_minutes: float, zeta: float,
               varpi: float = 0.49) -> SpotVolSeries:
    """Trailing-window truncated realized volatility, per-sqrt(day) units.

    At grid index i >= m the estimate is
    sqrt( (1/(m delta)) * sum of the last m squared truncated returns );
    the first m - 1 indices (and index 0) are NaN.
    """
    n = day.path.n
    delta = day.path.delta_n
    m = int(round(window_minutes * n / day.minutes_per_day))
    if m < 2:
        raise ConfigError("TV window must span at least 2 observations")
    dY = day.path.returns()
    sq = np.where(np.abs(dY) < zeta * delta ** varpi, dY ** 2, 0.0)
    csum = np.concatenate([[0.0], np.cumsum(sq)])
    vals = np.full(n + 1, np.nan)
    vals[m:] = np.sqrt((csum[m:] - csum[:-m]) / (m * delta))
    return SpotVolSeries(delta_n=delta, values=vals)


def rescale_sv(sv: SpotVolSeries, prev_tv: SpotVolSeries,
               prev_sv: SpotVolSeries, use_median: bool = False) -> SpotVolSeries:
    """Scale SV so the previous day's SV level matches its TV level.

    Multiplicative: every value times (prev-day TV level / prev-day SV
    level), with level = mean (or median behind the flag).  Shape and
    ratios are preserved exactly.
    """
    agg = np.nanmedian if use_median else np.nanmean
    tv_level = float(agg(prev_tv.values))
    sv_level = float(agg(prev_sv.values))
    if not sv_level > 0:
        raise DataError("previous-day SV level is zero; cannot rescale")
    return SpotVolSeries(delta_n=sv.delta_n,
                         values=sv.values * (tv_level / sv_level))


def _region_start_minute(region: ViolationRegion, day: TradingDay) -> float:
    return region.start / day.path.n * day.minutes_per_day


def day_block_counts(regions_by_day: dict, days_by_id: dict,
                     blocks=DEFAULT_BLOCKS) -> dict:
    """Count regions per intraday block, keyed by the block of the start.

    ``blocks`` are half-open minute boundaries partitioning the session.
    """
    edges = list(blocks)
    names = BLOCK_NAMES if len(edges) == 4 else [
        f"block{i}" for i in range(len(edges) - 1)]
    counts = {name: 0 for name in names}
    for day_id, regions in regions_by_day.items():
        day = days_by_id[day_id]
        for region in regions:
            minute = _region_start_minute(region, day)
            for b in range(len(edges) - 1):
                if edges[b] <= minute < edges[b + 1]:
                    counts[names[b]] += 1
                    break
    counts["Total"] = sum(v for k, v in counts.items() if k != "Total")
    return counts


def duration_histogram(regions_by_day: dict, days_by_id: dict,
                       bin_width_min: float = 5.0,
                       blocks=DEFAULT_BLOCKS) -> dict:
    """Histogram of region durations (minutes), overall and per block."""
    if bin_width_min <= 0:
        raise ConfigError("bin width must be positive")
    per_block = {name: [] for name in BLOCK_NAMES}
    durations = []
    for day_id, regions in regions_by_day.items():
        day = days_by_id[day_id]
        for region in regions:
            durations.append(region.duration_min)
            minute = _region_start_minute(region, day)
            for b, name in enumerate(BLOCK_NAMES):
                if blocks[b] <= minute < blocks[b + 1]:
                    per_block[name].append(region.duration_min)
                    break
    max_dur = max(durations, default=0.0)
    n_bins = max(1, int(math.floor(max_dur / bin_width_min)) + 1)
    edges = np.arange(n_bins + 1) * bin_width_min
    hist = {"edges": edges,
            "overall": np.histogram(durations, bins=edges)[0]}
    for name in BLOCK_NAMES:
        hist[name] = np.histogram(per_block[name], bins=edges)[0]
    return hist


def yearly_counts(regions_by_day: dict, days_by_id: dict) -> dict:
    """Region counts grouped by calendar year of the day id."""
    out: dict[int, int] = {}
    for day_id, regions in regions_by_day.items():
        if not regions:
            continue
        date = days_by_id[day_id].date
        if date is None:
            raise DataError(f"day id {day_id!r} carries no parseable date")
        out[date.year] = out.get(date.year, 0) + len(regions)
    return dict(sorted(out.items()))


def vol_comparison(days_by_id: dict, regions_by_day: dict, tv_by_day: dict,
                   sv_by_day: dict, horizon_min: float = 60.0,
                   exclude_days=()) -> dict:
    """Pooled mean TV and SV over the hour around region starts.

    Windows are [start - horizon, start) and [start, start + horizon) in
    minutes; windows clipped by the session boundary keep their available
    observations.  ``exclude_days`` drops whole days (e.g. FOMC dates).
    """
    pools = {"tv_before": [], "sv_before": [], "tv_after": [], "sv_after": []}
    excluded = set(exclude_days)
    for day_id, regions in regions_by_day.items():
        if day_id in excluded or str(day_id) in excluded:
            continue
        day = days_by_id[day_id]
        tv = tv_by_day[day_id].values
        sv = sv_by_day[day_id].values
        obs_per_min = day.path.n / day.minutes_per_day
        h = int(round(horizon_min * obs_per_min))
        for region in regions:
            s = region.start
            before = slice(max(0, s - h), s)
            after = slice(s, min(day.path.n + 1, s + h))
            pools["tv_before"].append(tv[before])
            pools["sv_before"].append(sv[before])
            pools["tv_after"].append(tv[after])
            pools["sv_after"].append(sv[after])
    out = {}
    for key, chunks in pools.items():
        pooled = np.concatenate(chunks) if chunks else np.empty(0)
        pooled = pooled[~np.isnan(pooled)]
        out[key] = float(pooled.mean()) if len(pooled) else math.nan
    return out


def analyze_corpus(days: list[TradingDay], xi: float,
                   window_min: float = 30.0, min_span_min: float = 5.0,
                   varpi: float = 0.49, tv_window_min: float = 30.0,
                   horizon_min: float = 60.0, bin_width_min: float = 5.0,
                   blocks=DEFAULT_BLOCKS, exclude_days=(),
                   use_median_rescale: bool = False,
                   region_rule: str = "union") -> CorpusReport:
    """The full empirical pipeline over a day-sorted corpus.

    Day 0 only initializes the truncation scale and the SV rescaling level;
    detection runs on days 1..N-1.  Per day d: the truncation scale is
    4 x median of day d-1's rescaled SV, TV uses the same (zeta, varpi) as
    the detector, and the scan warms up after w_n + r_n observations.
    """
    if any(d.sv is None for d in days):
        raise DataError("analysis requires a spot_vol column on every day")
    days = sorted(days, key=lambda d: str(d.day_id))
    days_by_id = {d.day_id: d for d in days}
    report = CorpusReport()
    tv_by_day, sv_by_day = {}, {}

    prev = days[0]
    # bootstrap day 0 from its own raw SV
    zeta = truncation_scale(prev.sv)
    prev_tv = rolling_tv(prev, tv_window_min, zeta, varpi)
    prev_sv_resc = rescale_sv(prev.sv, prev_tv, prev.sv,
                              use_median=use_median_rescale)
    tv_by_day[prev.day_id] = prev_tv
    sv_by_day[prev.day_id] = prev_sv_resc

    for day in days[1:]:
        zeta = truncation_scale(prev_sv_resc)
        n = day.path.n
        w_n = int(round(window_min * n / day.minutes_per_day))
        r_n = int(round(min_span_min * n / day.minutes_per_day))
        cfg = DetectorConfig(xi=xi, delta_n=day.path.delta_n, w_n=w_n,
                             r_n=r_n, varpi=varpi, zeta=zeta,
                             warmup=w_n + r_n, region_rule=region_rule)
        sv_resc = rescale_sv(day.sv, prev_tv, prev.sv,
                             use_median=use_median_rescale)
        report.regions_by_day[day.day_id] = identify_regions(
            day.path, sv_resc, cfg, minutes_per_day=day.minutes_per_day)
        tv = rolling_tv(day, tv_window_min, zeta, varpi)
        tv_by_day[day.day_id] = tv
        sv_by_day[day.day_id] = sv_resc
        prev, prev_tv, prev_sv_resc = day, tv, sv_resc

    report.block_counts = day_block_counts(report.regions_by_day, days_by_id,
                                           blocks)
    report.histogram = duration_histogram(report.regions_by_day, days_by_id,
                                          bin_width_min, blocks)
    if all(d.date is not None for d in days):
        report.yearly = yearly_counts(report.regions_by_day, days_by_id)
    report.vol_rows = [
        ("ALL", vol_comparison(days_by_id, report.regions_by_day, tv_by_day,
                               sv_by_day, horizon_min)),
    ]
    if exclude_days:
        report.vol_rows.append(
            ("EXCLUDED", vol_comparison(days_by_id, report.regions_by_day,
                                        tv_by_day, sv_by_day, horizon_min,
                                        exclude_days=exclude_days)))
    return report
