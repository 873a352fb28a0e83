"""Streaming GLR-CUSUM detection.

Returns are standardized by spot volatility and truncated at
``zeta * delta_n**varpi`` (truncated increments contribute zero to the
prefix sums but still count toward window length).  At every index l the
scan statistic

    max_k |S_l - S_k| / sqrt((l - k) delta_n)

is compared against the threshold ``xi`` over admissible window starts
``l - w_n - r_n <= k < l - r_n``; ``w_n = None`` removes the maximum-window
constraint and ``r_n = 0`` the minimum-span one.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, WindowRangeError
from .sim_paths import PricePath, SpotVolSeries


@dataclass(frozen=True)
class DetectorConfig:
    """Stopping-rule parameters.

    ``w_n`` and ``r_n`` are in observations.  ``zeta = None`` means the
    truncation scale is supplied at run time (e.g. from the previous day's
    spot-vol median via :func:`truncation_scale`); scan entry points require
    it to be set.  ``warmup`` suppresses alarms at indices l <= warmup.
    """

    xi: float
    delta_n: float
    w_n: int | None = None
    r_n: int = 0
    varpi: float = 0.49
    zeta: float | None = None
    warmup: int = 0
    reset_on_alarm: bool = False
    region_rule: str = "union"   # or "argmax"

    def __post_init__(self):
        if not (math.isfinite(self.xi) and self.xi > 0):
            raise ConfigError("xi must be positive and finite")
        if not 0 < self.varpi < 0.5:
            raise ConfigError("varpi must lie in (0, 0.5)")
        if self.zeta is not None and not self.zeta > 0:
            raise ConfigError("zeta must be positive")
        if self.delta_n <= 0:
            raise ConfigError("delta_n must be positive")
        if self.r_n < 0 or (self.w_n is not None and not self.r_n < self.w_n):
            raise ConfigError("need 0 <= r_n < w_n")
        if self.warmup < 0:
            raise ConfigError("warmup must be nonnegative")
        if self.region_rule not in ("union", "argmax"):
            raise ConfigError("region_rule must be 'union' or 'argmax'")

    @property
    def w_eff(self) -> int:
        """Window bound as an integer usable by the kernels."""
        return _kernels.UNBOUNDED if self.w_n is None else self.w_n

    def with_zeta(self, zeta: float) -> "DetectorConfig":
        return replace(self, zeta=zeta)

    def truncation_threshold(self) -> float:
        if self.zeta is None:
            raise ConfigError("truncation scale zeta is not set")
        return self.zeta * self.delta_n ** self.varpi


@dataclass(frozen=True)
class AlarmEvent:
    """A threshold crossing at index l with its maximizing window start."""

    l: int
    k_star: int
    statistic: float
    day_index: int = 0


@dataclass(frozen=True)
class ViolationRegion:
    """Merged union of exceeding scan windows (grid-index endpoints)."""

    start: int
    end: int
    peak_stat: float
    duration_min: float


def standardized_increment(dY: float, sigma_hat: float,
                           cfg: DetectorConfig) -> float:
    """dY / sigma_hat if |dY| is below the truncation threshold, else 0."""
    if not sigma_hat > 0:
        raise DataError(f"spot volatility must be positive, got {sigma_hat}")
    if not math.isfinite(dY):
        raise DataError(f"non-finite return {dY}")
    if abs(dY) >= cfg.truncation_threshold():
        return 0.0
    return dY / sigma_hat


def truncation_scale(prev_day_vols: SpotVolSeries) -> float:
    """4 x median of the previous day's spot-vol estimates."""
    vals = prev_day_vols.values[~np.isnan(prev_day_vols.values)]
    if len(vals) == 0:
        raise DataError("empty spot-vol series")
    return 4.0 * float(np.median(vals))


class DetectorState:
    """Single-stream scan state: prefix sums plus a bounded anchor buffer.

    One writer per state; feed increments in grid order through
    :meth:`step`.  For a windowed detector only the last ``w_n + r_n + 1``
    prefix anchors are retained; older anchors raise WindowRangeError when
    queried.
    """

    def __init__(self, cfg: DetectorConfig):
        self.cfg = cfg
        self.l = 0
        self.alarms: list[AlarmEvent] = []
        if cfg.w_n is None:
            self._buf = deque([0.0])
        else:
            self._buf = deque([0.0], maxlen=cfg.w_n + cfg.r_n + 1)
        self._base = 0  # global index of the oldest retained anchor

    @property
    def prefix_sum(self) -> float:
        return self._buf[-1]

    def _anchor(self, k: int) -> float:
        if k < self._base:
            raise WindowRangeError(
                f"anchor {k} evicted (oldest retained is {self._base})")
        if k > self.l:
            raise WindowRangeError(f"anchor {k} is beyond index {self.l}")
        return self._buf[k - self._base]

    def glr_stat(self, k: int, l: int) -> float:
        """|S_l - S_k| / sqrt((l - k) delta_n) from retained prefix anchors."""
        if not 0 <= k < l <= self.l:
            raise WindowRangeError(f"invalid window [{k}, {l}] at index {self.l}")
        return abs(self._anchor(l) - self._anchor(k)) / math.sqrt(
            (l - k) * self.cfg.delta_n)

    def step(self, dY: float, sigma_hat: float,
             day_index: int = 0) -> AlarmEvent | None:
        """Ingest one return; emit an AlarmEvent when the scan exceeds xi.

        The state keeps accepting data after alarms (no hard stop); set
        ``reset_on_alarm`` for classical restart semantics, which discards
        all retained anchors so no window spans the alarm point.
        """
        cfg = self.cfg
        x = standardized_increment(dY, sigma_hat, cfg)
        if self._buf.maxlen is not None and len(self._buf) == self._buf.maxlen:
            self._base += 1
        self._buf.append(self._buf[-1] + x)
        self.l += 1
        l = self.l
        if l <= cfg.warmup:
            return None
        k_lo = max(self._base, l - cfg.w_eff - cfg.r_n)
        k_hi = l - cfg.r_n
        best, best_k = 0.0, -1
        sl = self._buf[-1]
        for k in range(k_lo, min(k_hi, l)):
            stat = abs(sl - self._anchor(k)) / math.sqrt(
                (l - k) * cfg.delta_n)
            if stat > best:
                best, best_k = stat, k
        if best > cfg.xi:
            event = AlarmEvent(l=l, k_star=best_k, statistic=best,
                               day_index=day_index)
            self.alarms.append(event)
            if cfg.reset_on_alarm:
                self._buf.clear()
                self._buf.append(0.0)
                self._base = l
            return event
        return None


def standardize_series(path: PricePath, vols: SpotVolSeries,
                       cfg: DetectorConfig) -> np.ndarray:
    """Vectorized standardized-truncated increments for one day."""
    dY = path.returns()
    sig = vols.values[:-1]
    if np.any(np.isnan(sig)) or np.any(sig <= 0):
        raise DataError("spot volatility must be positive at every interval start")
    if not np.all(np.isfinite(dY)):
        raise DataError("non-finite return in input series")
    out = dY / sig
    out[np.abs(dY) >= cfg.truncation_threshold()] = 0.0
    return out


def _prefix(increments: np.ndarray) -> np.ndarray:
    p = np.empty(len(increments) + 1)
    p[0] = 0.0
    np.cumsum(increments, out=p[1:])
    return p


def first_alarm(path: PricePath, vols: SpotVolSeries,
                cfg: DetectorConfig) -> AlarmEvent | None:
    """Run the scan over a full day; return the first alarm, if any."""
    if len(vols.values) != len(path.log_prices):
        raise DataError("path and spot-vol series are not aligned")
    prefix = _prefix(standardize_series(path, vols, cfg))
    l, k, stat = _kernels.first_alarm(prefix, cfg.delta_n, cfg.xi,
                                      cfg.w_eff, cfg.r_n, 0, cfg.warmup)
    if l < 0:
        return None
    return AlarmEvent(l=int(l), k_star=int(k), statistic=float(stat),
                      day_index=path.day_index)


def scan_day(path: PricePath, vols: SpotVolSeries, cfg: DetectorConfig):
    """All alarms over one day: list of AlarmEvent (one per exceeding index)."""
    prefix = _prefix(standardize_series(path, vols, cfg))
    stats, kstars = _kernels.scan_all(prefix, cfg.delta_n, cfg.w_eff,
                                      cfg.r_n, cfg.warmup)
    return [
        AlarmEvent(l=int(l), k_star=int(kstars[l]), statistic=float(stats[l]),
                   day_index=path.day_index)
        for l in np.nonzero(stats > cfg.xi)[0]
    ]


def identify_regions(path: PricePath, vols: SpotVolSeries,
                     cfg: DetectorConfig,
                     minutes_per_day: float = 390.0) -> list[ViolationRegion]:
    """Merged intervals of exceeding scan windows, sorted by start.

    With the default "union" rule every admissible window with stat > xi
    contributes its whole span; "argmax" restricts to each index's
    maximizing window.  Overlapping or adjacent spans merge into maximal
    regions.
    """
    prefix = _prefix(standardize_series(path, vols, cfg))
    cover_fn = (_kernels.exceed_cover if cfg.region_rule == "union"
                else _kernels.argmax_cover)
    covered, peak = cover_fn(prefix, cfg.delta_n, cfg.xi, cfg.w_eff,
                             cfg.r_n, cfg.warmup)
    regions = []
    i = 0
    n = len(covered)
    while i < n:
        if covered[i]:
            j = i
            while j + 1 < n and covered[j + 1]:
                j += 1
            regions.append(ViolationRegion(
                start=i, end=j, peak_stat=float(peak[i:j + 1].max()),
                duration_min=(j - i) * cfg.delta_n * minutes_per_day))
            i = j + 1
        else:
            i += 1
    return regions
