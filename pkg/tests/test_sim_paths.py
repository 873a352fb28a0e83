"""Unit tests for the daily path simulator and contamination components."""

import math

import numpy as np
import pytest
from scipy import integrate

from driftscan.errors import ConfigError
from driftscan.sim_paths import (DbConfig, HestonConfig, PnConfig, PricePath,
                                 SpotVolSeries, apply_db_noise, apply_pn_noise,
                                 db_cumulative, db_increment, derive_seed,
                                 pn_decay, proxy_spot_vol, simulate_days,
                                 simulate_heston_day)


# ------------------------------------------------------------ config checks

def test_config_validation():
    with pytest.raises(ConfigError):
        HestonConfig(kappa=-1.0)
    with pytest.raises(ConfigError):
        HestonConfig(rho=1.5)
    with pytest.raises(ConfigError):
        DbConfig(c=1.0, theta_db=0.4)      # outside (0.5, 1)
    with pytest.raises(ConfigError):
        DbConfig(c=1.0, tau=0.5, tau_bar=0.4)
    with pytest.raises(ConfigError):
        PnConfig(jump_size=0.02, theta_pn=0.6)  # outside (0, 0.5)
    with pytest.raises(ConfigError):
        PricePath(delta_n=1.0 / 10, log_prices=np.zeros(5))


# ------------------------------------------------------- degenerate dynamics

def test_zero_vov_constant_variance():
    cfg = HestonConfig(vov=0.0, jump_intensity=0.0)
    _, vols, _ = simulate_heston_day(cfg, 100, cfg.theta, seed=1)
    expected = math.sqrt(cfg.theta / cfg.days_per_year)
    assert np.allclose(vols.values, expected, rtol=0, atol=1e-15)


def test_zero_dynamics_constant_price():
    cfg = HestonConfig(theta=0.0, vov=0.0, drift=0.0, jump_intensity=0.0)
    path, vols, jumps = simulate_heston_day(cfg, 100, 0.0, seed=1)
    assert np.all(path.log_prices == cfg.x0)
    assert np.all(vols.values == 0.0)
    assert jumps == []


def test_variance_nonnegative():
    # aggressive vol-of-vol exercises the full-truncation clamp
    cfg = HestonConfig(vov=3.0)
    for seed in range(5):
        _, vols, _ = simulate_heston_day(cfg, 390, 1e-4, seed=seed)
        assert np.all(vols.values >= 0.0)


# ---------------------------------------------------------- moment oracles

def test_heston_quadratic_variation_moment():
    # sample mean of the daily sum of squared returns vs theta/days_per_year,
    # continuous part only
    cfg = HestonConfig(jump_intensity=0.0)
    reps = 100_000
    qv = np.empty(reps)
    for i in range(reps):
        path, _, _ = simulate_heston_day(cfg, 390, cfg.theta, seed=i)
        r = path.returns()
        qv[i] = r @ r
    target = cfg.theta / cfg.days_per_year
    se = qv.std(ddof=1) / math.sqrt(reps)
    assert abs(qv.mean() - target) <= 3.0 * se


def test_proxy_spot_vol_moment():
    n_pts = 1_000_000
    true = SpotVolSeries(delta_n=1.0 / (n_pts - 1), values=np.ones(n_pts))
    prox = proxy_spot_vol(true, 0.02, seed=3)
    rel = prox.values / true.values - 1.0
    assert abs(rel.std(ddof=1) - 0.02) <= 0.01 * 0.02


def test_proxy_trivial_cases():
    true = SpotVolSeries(delta_n=0.5, values=np.array([0.1, 0.0, 0.2]))
    same = proxy_spot_vol(true, 0.0, seed=0)
    assert np.array_equal(same.values[[0, 2]], true.values[[0, 2]])
    # zero input floored to epsilon, never negative
    assert 0.0 < same.values[1] <= 1e-8


# --------------------------------------------------------------- drift burst

def test_db_increment_inactive_regions():
    cfg = DbConfig(c=3.0)
    assert db_increment(0.0, 0.25, cfg) == 0.0
    assert db_increment(0.4, 0.9, cfg) == 0.0


def test_db_increment_quadrature_oracle():
    cfg = DbConfig(c=3.0, tau=0.25, tau_bar=0.4, theta_db=0.55)
    t1, t2 = 0.25, 0.25 + 1.0 / 390
    # the integrand is singular at tau; use QAWS weighted quadrature with
    # the (s - t1)^(-theta_db) factor handled analytically by the routine
    oracle, err = integrate.quad(
        lambda s: cfg.c, t1, t2, weight="alg", wvar=(-cfg.theta_db, 0.0),
        limit=200)
    val = db_increment(t1, t2, cfg)
    assert err < 1e-10 * abs(oracle)
    assert abs(val - oracle) <= 1e-10 * abs(oracle)


def test_db_increment_additivity_random_grid():
    cfg = DbConfig(c=2.0, theta_db=0.7)
    rng = np.random.default_rng(0)
    ts = np.sort(rng.uniform(0.0, 1.0, 20))
    total = sum(db_increment(ts[i], ts[i + 1], cfg) for i in range(19))
    assert abs(total - db_increment(ts[0], ts[-1], cfg)) < 1e-12


def test_db_cumulative_closed_form_endpoint():
    cfg = DbConfig(c=3.0, tau=0.25, tau_bar=0.4, theta_db=0.65)
    expected = 3.0 / 0.35 * 0.15 ** 0.35
    assert abs(db_cumulative(np.array([0.4]), cfg)[0] - expected) < 1e-14
    # H is flat after tau_bar and zero before tau
    assert db_cumulative(np.array([0.2]), cfg)[0] == 0.0
    assert db_cumulative(np.array([0.9]), cfg)[0] == pytest.approx(expected)


def test_apply_db_noise_matches_cumulative():
    cfg = DbConfig(c=3.0)
    n = 390
    path = PricePath(delta_n=1.0 / n, log_prices=np.zeros(n + 1))
    obs = apply_db_noise(path, cfg)
    assert np.array_equal(obs.log_prices, db_cumulative(path.times, cfg))
    pre = path.times <= cfg.tau
    assert np.all(obs.log_prices[pre] == 0.0)


# ----------------------------------------------------------- persistent noise

def test_pn_decay_pinned_values():
    cfg = PnConfig(jump_size=0.02, tau=0.25, tau_bar=0.4, theta_pn=0.35)
    assert pn_decay(0.25, cfg) == 1.0
    assert pn_decay(0.4, cfg) == 0.0
    assert pn_decay(0.1, cfg) == 0.0
    assert pn_decay(0.9, cfg) == 0.0
    assert pn_decay(0.325, cfg) == pytest.approx(1.0 - 0.5 ** 0.35, abs=1e-14)


def test_apply_pn_noise_delayed_reaction():
    cfg = PnConfig(jump_size=0.02, eta=-1.0)
    n = 390
    path = PricePath(delta_n=1.0 / n, log_prices=np.zeros(n + 1))
    obs = apply_pn_noise(path, cfg)
    jump_idx = int(np.searchsorted(path.times, cfg.tau))
    # eta = -1: the gap offsets the jump, so the move at tau is only the
    # (small) decayed residual, not the full jump
    g0 = pn_decay(path.times[jump_idx], cfg)
    move = obs.log_prices[jump_idx] - obs.log_prices[jump_idx - 1]
    assert move == pytest.approx(cfg.jump_size * (1.0 - g0), abs=1e-15)
    assert abs(move) < 0.5 * cfg.jump_size
    # after tau_bar the observed price carries the full jump
    post = path.times >= cfg.tau_bar
    assert np.allclose(obs.log_prices[post], cfg.jump_size)
    pre = path.times < cfg.tau
    assert np.all(obs.log_prices[pre] == 0.0)


# --------------------------------------------------- local exponent matching

def _loglog_slope(x, y):
    return np.polyfit(np.log(x), np.log(y), 1)[0]


@pytest.mark.parametrize("theta_pn", [0.25, 0.35, 0.45])
def test_local_exponent_correspondence(theta_pn):
    # |dH| vs (t - tau) slope is theta_pn - 1 for PN and -theta_db for the
    # matched DB exponent theta_db = 1 - theta_pn
    n = 39000
    times = np.arange(n + 1) / n
    tau, tau_bar = 0.25, 0.4
    pn = PnConfig(jump_size=0.02, tau=tau, tau_bar=tau_bar, theta_pn=theta_pn)
    h_pn = pn.eta * pn.jump_size * pn_decay(times, pn)
    db = DbConfig(c=1.0, tau=tau, tau_bar=tau_bar, theta_db=1.0 - theta_pn)
    h_db = db_cumulative(times, db)
    start = int(np.searchsorted(times, tau)) + 1  # skip the boundary step
    for h in (h_pn, h_db):
        dh = np.abs(np.diff(h))[start:start + 50]
        mid = (times[start:start + 50] + times[start + 1:start + 51]) / 2 - tau
        slope = _loglog_slope(mid, dh)
        assert abs(slope - (theta_pn - 1.0)) < 0.05


# --------------------------------------------------------------- determinism

def test_bit_identical_determinism():
    heston = HestonConfig()
    a = simulate_days(heston, 390, 3, master_seed=11,
                      contamination=DbConfig(c=0.01))
    b = simulate_days(heston, 390, 3, master_seed=11,
                      contamination=DbConfig(c=0.01))
    for da, db_ in zip(a, b):
        assert np.array_equal(da.efficient.log_prices, db_.efficient.log_prices)
        assert np.array_equal(da.observed.log_prices, db_.observed.log_prices)
        assert np.array_equal(da.proxy_vol.values, db_.proxy_vol.values)


def test_derive_seed_distinct():
    seeds = {derive_seed(42, i) for i in range(10_000)}
    assert len(seeds) == 10_000
    assert derive_seed(1, 0) != derive_seed(2, 0)


def test_simulate_days_carries_variance():
    heston = HestonConfig(jump_intensity=0.0)
    days = simulate_days(heston, 390, 2, master_seed=5)
    v_end = days[0].true_vol.values[-1] ** 2 * heston.days_per_year
    # day 1 must start from day 0's terminal variance, not theta
    v_start = days[1].true_vol.values[0] ** 2 * heston.days_per_year
    assert v_start == pytest.approx(v_end, rel=1e-12)
