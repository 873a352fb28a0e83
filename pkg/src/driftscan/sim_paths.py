"""Daily log-price path simulation.

Heston stochastic volatility with compound-Poisson jumps, plus the two
contamination components that break the semimartingale locally:

* drift burst: an integrable drift explosion ``c (s - tau)^(-theta)`` active
  on [tau, tau_bar];
* persistent noise: a gap between observed and efficient price that opens at
  an efficient-price jump and decays to zero over [tau, tau_bar].

All time quantities are in day units (one trading day = 1.0) and annualized
parameters are converted through ``days_per_year``.  Spot volatility is
per-sqrt(day).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError

# Floor applied to spot-vol proxies so standardization never divides by zero.
SPOT_VOL_FLOOR = 1e-8


def _require_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ConfigError(f"{name}: non-finite parameter value {v!r}")


@dataclass(frozen=True)
class HestonConfig:
    """Annualized Heston-with-jumps parameters for the efficient price."""

    kappa: float = 5.0
    theta: float = 0.0225
    vov: float = 0.4
    rho: float = -math.sqrt(0.5)
    drift: float = 0.0            # log-price drift per day
    jump_intensity: float = 0.6   # expected jumps per day
    jump_sd: float = 0.005        # jump size std in log-price units
    x0: float = math.log(1200.0)
    days_per_year: int = 252

    def __post_init__(self):
        _require_finite("HestonConfig", self.kappa, self.theta, self.vov,
                        self.rho, self.drift, self.jump_intensity,
                        self.jump_sd, self.x0)
        if self.kappa < 0 or self.theta < 0 or self.vov < 0:
            raise ConfigError("kappa, theta and vov must be nonnegative")
        if abs(self.rho) > 1:
            raise ConfigError("|rho| must be <= 1")
        if self.jump_intensity < 0 or self.jump_sd < 0:
            raise ConfigError("jump parameters must be nonnegative")
        if self.days_per_year <= 0:
            raise ConfigError("days_per_year must be positive")


@dataclass(frozen=True)
class DbConfig:
    """Drift-burst contamination: drift c (s - tau)^(-theta_db) on [tau, tau_bar].

    ``c`` is in log-price units per day^(1 - theta_db) with time measured in
    days; annualized scales must be divided by days_per_year before use.
    """

    c: float
    tau: float = 0.25
    tau_bar: float = 0.4
    theta_db: float = 0.65

    def __post_init__(self):
        _require_finite("DbConfig", self.c, self.tau, self.tau_bar,
                        self.theta_db)
        if not 0 <= self.tau < self.tau_bar <= 1:
            raise ConfigError("need 0 <= tau < tau_bar <= 1")
        if not 0.5 < self.theta_db < 1:
            raise ConfigError("theta_db must lie in (0.5, 1)")


@dataclass(frozen=True)
class PnConfig:
    """Persistent-noise contamination (delayed reaction to a price jump)."""

    jump_size: float
    tau: float = 0.25
    tau_bar: float = 0.4
    theta_pn: float = 0.35
    eta: float = -1.0

    def __post_init__(self):
        _require_finite("PnConfig", self.jump_size, self.tau, self.tau_bar,
                        self.theta_pn, self.eta)
        if not 0 <= self.tau < self.tau_bar <= 1:
            raise ConfigError("need 0 <= tau < tau_bar <= 1")
        if not 0 < self.theta_pn < 0.5:
            raise ConfigError("theta_pn must lie in (0, 0.5)")


@dataclass
class PricePath:
    """Equispaced log-price grid for one trading day."""

    delta_n: float
    log_prices: np.ndarray
    day_index: int = 0

    def __post_init__(self):
        self.log_prices = np.asarray(self.log_prices, dtype=float)
        if self.delta_n <= 0:
            raise ConfigError("delta_n must be positive")
        n = round(1.0 / self.delta_n)
        if len(self.log_prices) != n + 1:
            raise ConfigError(
                f"log_prices length {len(self.log_prices)} != 1/delta_n + 1 = {n + 1}")

    @property
    def n(self) -> int:
        return len(self.log_prices) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.delta_n

    def returns(self) -> np.ndarray:
        return np.diff(self.log_prices)


@dataclass
class SpotVolSeries:
    """Per-grid-point spot volatility, per-sqrt(day) units, aligned to a path.

    NaN entries mark undefined values (e.g. a rolling estimator's warm-up);
    all defined values must be nonnegative.
    """

    delta_n: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.delta_n <= 0:
            raise ConfigError("delta_n must be positive")
        defined = self.values[~np.isnan(self.values)]
        if np.any(defined < 0):
            raise ConfigError("spot vol values must be nonnegative")


def derive_seed(master_seed: int, index: int) -> int:
    """Per-replication seed via a splitmix64-style mix of (master, index).

    Replication results therefore do not depend on scheduling order or
    thread count.
    """
    z = (master_seed * 0x9E3779B97F4A7C15 + index + 1) & 0xFFFFFFFFFFFFFFFF
    z = (z + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def simulate_heston_day(cfg: HestonConfig, n: int, v0: float,
                        seed: int | None = None,
                        rng: np.random.Generator | None = None,
                        day_index: int = 0):
    """One simulated trading day of the efficient price.

    Euler scheme with full variance truncation on an n-point grid.  ``v0``
    is the initial annualized variance.  Pass either a seed or an existing
    Generator (the latter lets multi-day streams share one random stream).

    Returns (PricePath, true SpotVolSeries, jump list), where the jump list
    holds (time, realized_size, count) for every grid step with at least one
    Poisson jump; multiple jumps within one step are aggregated.
    """
    if n < 2:
        raise ConfigError("need at least 2 grid points per day")
    if v0 < 0 or not math.isfinite(v0):
        raise ConfigError("v0 must be finite and nonnegative")
    if rng is None:
        rng = np.random.default_rng(seed)
    delta_n = 1.0 / n
    z_price = rng.standard_normal(n)
    z_vol = rng.standard_normal(n)
    jump_counts = rng.poisson(cfg.jump_intensity * delta_n, n).astype(np.int64)
    z_jump = rng.standard_normal(n)
    dpy = cfg.days_per_year
    x, v = _kernels.heston_day(
        n, delta_n, cfg.kappa / dpy, cfg.theta, cfg.vov / math.sqrt(dpy),
        cfg.rho, cfg.drift, 1.0 / dpy, v0, cfg.x0, z_price, z_vol,
        jump_counts, z_jump, cfg.jump_sd)
    jumps = [
        (float((i + 1) * delta_n),
         float(math.sqrt(jump_counts[i]) * cfg.jump_sd * z_jump[i]),
         int(jump_counts[i]))
        for i in np.nonzero(jump_counts)[0]
    ]
    path = PricePath(delta_n=delta_n, log_prices=x, day_index=day_index)
    vols = SpotVolSeries(delta_n=delta_n, values=np.sqrt(v / dpy))
    return path, vols, jumps


def db_increment(t1: float, t2: float, cfg: DbConfig) -> float:
    """Integral of the burst drift over [t1, t2], by the closed antiderivative.

    Zero whenever [t1, t2] does not intersect [tau, tau_bar].
    """
    if not 0 <= t1 < t2:
        raise ConfigError("need 0 <= t1 < t2")
    lo = max(min(t1, cfg.tau_bar) - cfg.tau, 0.0)
    hi = max(min(t2, cfg.tau_bar) - cfg.tau, 0.0)
    if hi <= lo:
        return 0.0
    p = 1.0 - cfg.theta_db
    return cfg.c / p * (hi ** p - lo ** p)


def db_cumulative(times: np.ndarray, cfg: DbConfig) -> np.ndarray:
    """Cumulative burst component H(t) from 0, evaluated on a time grid."""
    t = np.asarray(times, dtype=float)
    clipped = np.clip(np.minimum(t, cfg.tau_bar) - cfg.tau, 0.0, None)
    p = 1.0 - cfg.theta_db
    return cfg.c / p * clipped ** p


def apply_db_noise(path: PricePath, cfg: DbConfig) -> PricePath:
    """Observed path Y = X + H with H the cumulative drift-burst component."""
    h = db_cumulative(path.times, cfg)
    return PricePath(delta_n=path.delta_n, log_prices=path.log_prices + h,
                     day_index=path.day_index)


def pn_decay(s, cfg: PnConfig):
    """Gap profile g(s): 1 at tau, decaying to 0 at tau_bar, 0 outside."""
    s = np.asarray(s, dtype=float)
    frac = (s - cfg.tau) / (cfg.tau_bar - cfg.tau)
    g = np.where((s >= cfg.tau) & (s <= cfg.tau_bar),
                 1.0 - np.clip(frac, 0.0, 1.0) ** cfg.theta_pn, 0.0)
    return g if g.ndim else float(g)


def apply_pn_noise(path: PricePath, cfg: PnConfig) -> PricePath:
    """Observed path under persistent noise.

    The efficient price jumps by ``jump_size`` at the first grid point at or
    after tau, and the observed price carries the gap eta * jump_size * g(t)
    on top.  With eta = -1 the observed path shows no instantaneous jump:
    the price reaction is delayed and unwinds as g decays.
    """
    times = path.times
    jump_idx = int(np.searchsorted(times, cfg.tau, side="left"))
    x = path.log_prices.copy()
    x[jump_idx:] += cfg.jump_size
    h = cfg.eta * cfg.jump_size * pn_decay(times, cfg)
    return PricePath(delta_n=path.delta_n, log_prices=x + h,
                     day_index=path.day_index)


def proxy_spot_vol(true_vol: SpotVolSeries, noise_scale: float,
                   seed: int | None = None,
                   rng: np.random.Generator | None = None) -> SpotVolSeries:
    """Noisy multiplicative proxy: sigma_hat = sigma * (1 + noise_scale * Z).

    Values are floored at a small positive epsilon so downstream
    standardization never divides by zero.
    """
    if noise_scale < 0:
        raise ConfigError("noise_scale must be nonnegative")
    if rng is None:
        rng = np.random.default_rng(seed)
    z = rng.standard_normal(len(true_vol.values))
    vals = np.maximum(true_vol.values * (1.0 + noise_scale * z),
                      SPOT_VOL_FLOOR)
    return SpotVolSeries(delta_n=true_vol.delta_n, values=vals)


@dataclass
class SimulatedDay:
    """Bundle of one simulated day, ready for CSV export."""

    day_index: int
    efficient: PricePath
    observed: PricePath
    true_vol: SpotVolSeries
    proxy_vol: SpotVolSeries
    jumps: list = field(default_factory=list)


def simulate_days(heston: HestonConfig, n: int, days: int, master_seed: int,
                  contamination=None, proxy_noise: float = 0.02,
                  v0: float | None = None) -> list[SimulatedDay]:
    """Simulate consecutive days with variance carried over day boundaries.

    ``contamination`` is None, a DbConfig, or a PnConfig and is applied to
    every day.  Each day consumes one derived seed stream.
    """
    out = []
    v = heston.theta if v0 is None else v0
    for d in range(days):
        rng = np.random.default_rng(derive_seed(master_seed, d))
        path, vols, jumps = simulate_heston_day(heston, n, v, rng=rng,
                                                day_index=d)
        if isinstance(contamination, DbConfig):
            observed = apply_db_noise(path, contamination)
        elif isinstance(contamination, PnConfig):
            observed = apply_pn_noise(path, contamination)
        elif contamination is None:
            observed = path
        else:
            raise ConfigError(f"unknown contamination {contamination!r}")
        proxy = proxy_spot_vol(vols, proxy_noise, rng=rng)
        out.append(SimulatedDay(d, path, observed, vols, proxy, jumps))
        v = float((vols.values[-1] ** 2) * heston.days_per_year)
    return out


def days_to_csv(days: list[SimulatedDay], fh, header_lines=()) -> None:
    """Write simulated days in the documented CSV schema."""
    for line in header_lines:
        fh.write(f"# {line}\n")
    fh.write("day,index,time_day_units,log_price_efficient,"
             "log_price_observed,spot_vol_true,spot_vol_proxy\n")
    for day in days:
        t = day.efficient.times
        for i in range(day.efficient.n + 1):
            fh.write(f"{day.day_index},{i},{float(t[i])!r},"
                     f"{float(day.efficient.log_prices[i])!r},"
                     f"{float(day.observed.log_prices[i])!r},"
                     f"{float(day.true_vol.values[i])!r},"
                     f"{float(day.proxy_vol.values[i])!r}\n")
