"""Unit tests for the streaming GLR-CUSUM detector."""

import math

import numpy as np
import pytest

from conftest import path_from_increments, unit_vols, wide_open_cfg
from driftscan.detector import (AlarmEvent, DetectorConfig, DetectorState,
                                ViolationRegion, first_alarm, identify_regions,
                                scan_day, standardize_series,
                                standardized_increment, truncation_scale)
from driftscan.errors import ConfigError, DataError, WindowRangeError
from driftscan.sim_paths import SpotVolSeries


# ------------------------------------------------------------ config checks

def test_config_validation():
    with pytest.raises(ConfigError):
        DetectorConfig(xi=0.0, delta_n=1.0 / 390)
    with pytest.raises(ConfigError):
        DetectorConfig(xi=4.0, delta_n=1.0 / 390, varpi=0.6)
    with pytest.raises(ConfigError):
        DetectorConfig(xi=4.0, delta_n=1.0 / 390, w_n=10, r_n=10)
    with pytest.raises(ConfigError):
        DetectorConfig(xi=4.0, delta_n=1.0 / 390, zeta=0.0)
    with pytest.raises(ConfigError):
        DetectorConfig(xi=4.0, delta_n=1.0 / 390).truncation_threshold()


# ------------------------------------------------- standardized increments

def test_standardized_increment_values():
    cfg = wide_open_cfg(4.0, 390)
    assert standardized_increment(0.0, 1.0, cfg) == 0.0
    # pinned arithmetic: 0.001 / 0.2 = 0.005
    assert standardized_increment(0.001, 0.2, cfg) == 0.005
    # at or above the threshold the indicator switches off
    thr = cfg.truncation_threshold()
    assert standardized_increment(thr, 0.2, cfg) == 0.0
    assert standardized_increment(-2 * thr, 0.2, cfg) == 0.0
    with pytest.raises(DataError):
        standardized_increment(0.001, 0.0, cfg)
    with pytest.raises(DataError):
        standardized_increment(math.nan, 1.0, cfg)


def test_truncation_scale():
    assert truncation_scale(SpotVolSeries(1.0, np.array([1.0, 2.0, 3.0]))) == 8.0
    # even count: median of middle two
    assert truncation_scale(SpotVolSeries(1.0, np.array([2.0, 2.0, 2.0, 2.0]))) == 8.0
    vals = np.random.default_rng(0).uniform(0.001, 0.02, 391)
    sort_oracle = 4.0 * np.sort(vals)[195]
    assert truncation_scale(SpotVolSeries(1.0 / 390, vals)) == pytest.approx(
        sort_oracle, rel=0, abs=0)
    with pytest.raises(DataError):
        truncation_scale(SpotVolSeries(1.0, np.array([np.nan])))


# ----------------------------------------------------------- glr statistics

def test_glr_stat_examples():
    n = 390
    delta = 1.0 / n
    cfg = wide_open_cfg(4.0, n)
    state = DetectorState(cfg)
    for _ in range(10):
        state.step(0.0, 1.0)
    assert state.glr_stat(0, 10) == 0.0
    assert state.glr_stat(4, 7) == 0.0

    state = DetectorState(cfg)
    state.step(0.003, 1.0)
    # single increment, window of one: |x| / sqrt(delta)
    assert state.glr_stat(0, 1) == pytest.approx(0.003 / math.sqrt(delta))

    with pytest.raises(WindowRangeError):
        state.glr_stat(1, 1)
    with pytest.raises(WindowRangeError):
        state.glr_stat(0, 5)


def test_glr_stat_six_increment_example():
    n = 390
    delta = 1.0 / n
    cfg = wide_open_cfg(10.0, n)
    state = DetectorState(cfg)
    for _ in range(6):
        state.step(2.0 * math.sqrt(delta), 1.0)
    assert state.glr_stat(0, 6) == pytest.approx(2.0 * math.sqrt(6.0))


def test_step_six_increment_alarm_and_min_span():
    n = 390
    delta = 1.0 / n
    inc = 2.0 * math.sqrt(delta)
    cfg = wide_open_cfg(4.0, n, w_n=30, r_n=5)
    state = DetectorState(cfg)
    events = [state.step(inc, 1.0) for _ in range(6)]
    assert all(e is None for e in events[:5])
    alarm = events[5]
    assert alarm is not None and alarm.l == 6 and alarm.k_star == 0
    assert alarm.statistic == pytest.approx(2.0 * math.sqrt(6.0))

    # with r_n = 6 the span-6 window is inadmissible: no alarm
    cfg6 = wide_open_cfg(4.0, n, w_n=30, r_n=6)
    state6 = DetectorState(cfg6)
    assert all(state6.step(inc, 1.0) is None for _ in range(6))


def test_zero_stream_never_alarms():
    cfg = wide_open_cfg(3.0, 390, w_n=30)
    state = DetectorState(cfg)
    assert all(state.step(0.0, 1.0) is None for _ in range(390))
    assert state.alarms == []


def test_windowed_buffer_evicts_old_anchors():
    cfg = wide_open_cfg(100.0, 390, w_n=10, r_n=0)
    state = DetectorState(cfg)
    for _ in range(50):
        state.step(1e-4, 1.0)
    with pytest.raises(WindowRangeError):
        state.glr_stat(5, 50)
    # anchors inside w_n + r_n remain queryable
    assert state.glr_stat(45, 50) > 0.0


def test_warmup_suppresses_early_alarms():
    n = 390
    inc = 2.0 * math.sqrt(1.0 / n)
    cfg = wide_open_cfg(4.0, n, w_n=30, warmup=20)
    path = path_from_increments([inc] * 40 + [0.0] * (n - 40))
    ev = first_alarm(path, unit_vols(n), cfg)
    assert ev is not None and ev.l == 21


# -------------------------------------------------------------- batch scans

def test_first_alarm_matches_streaming():
    rng = np.random.default_rng(7)
    n = 390
    inc = rng.standard_normal(n) * math.sqrt(1.0 / n) * 1.4
    path = path_from_increments(inc)
    vols = unit_vols(n)
    for kw in ({"w_n": 30}, {"w_n": 30, "r_n": 5}, {}):
        cfg = wide_open_cfg(2.2, n, **kw)
        batch = first_alarm(path, vols, cfg)
        state = DetectorState(cfg)
        stream = None
        for x in inc:
            ev = state.step(x, 1.0)
            if ev is not None and stream is None:
                stream = ev
        assert (batch is None) == (stream is None)
        if batch is not None:
            assert batch.l == stream.l and batch.k_star == stream.k_star
            assert batch.statistic == pytest.approx(stream.statistic, rel=1e-12)


def test_scan_day_alarm_set_equals_streaming():
    rng = np.random.default_rng(12)
    n = 390
    inc = rng.standard_normal(n) * math.sqrt(1.0 / n) * 1.5
    path = path_from_increments(inc)
    cfg = wide_open_cfg(2.5, n, w_n=30, r_n=5)
    batch = scan_day(path, unit_vols(n), cfg)
    state = DetectorState(cfg)
    stream = [ev for x in inc if (ev := state.step(x, 1.0)) is not None]
    assert [(e.l, e.k_star) for e in batch] == [(e.l, e.k_star) for e in stream]


def test_standardize_series_requires_positive_vols():
    path = path_from_increments([0.001] * 10)
    bad = SpotVolSeries(1.0 / 10, np.concatenate([[0.0], np.ones(10)]))
    with pytest.raises(DataError):
        standardize_series(path, bad, wide_open_cfg(4.0, 10))


# ------------------------------------------------------------------ regions

def test_identify_regions_trivial_cases():
    n = 390
    path = path_from_increments(np.zeros(n))
    cfg = wide_open_cfg(3.0, n, w_n=30)
    assert identify_regions(path, unit_vols(n), cfg) == []


def test_identify_regions_overlap_merge():
    # Two opposite-sign spikes produce exceeding-window covers [10, 39] and
    # [35, 60]; overlapping covers must merge into the single region [10, 60].
    n = 390
    delta = 1.0 / n
    inc = np.zeros(n)
    inc[24] = 0.8     # spans <= 15 exceed xi = 4
    inc[47] = -0.74   # spans <= 13 exceed
    path = path_from_increments(inc)
    cfg = wide_open_cfg(4.0, n, w_n=30, r_n=0)
    regions = identify_regions(path, unit_vols(n), cfg)
    assert len(regions) == 1
    reg = regions[0]
    assert (reg.start, reg.end) == (10, 60)
    assert reg.peak_stat == pytest.approx(0.8 / math.sqrt(delta))
    assert reg.duration_min == pytest.approx(50.0)


def test_identify_regions_single_window():
    n = 390
    inc = np.zeros(n)
    inc[99] = 0.8
    path = path_from_increments(inc)
    cfg = wide_open_cfg(4.0, n, w_n=30, r_n=0)
    regions = identify_regions(path, unit_vols(n), cfg)
    assert len(regions) == 1
    assert (regions[0].start, regions[0].end) == (85, 114)

    # with w_n = 1 exactly one window (99, 100) exceeds: region is [99, 100]
    cfg1 = wide_open_cfg(4.0, n, w_n=1, r_n=0)
    regions1 = identify_regions(path, unit_vols(n), cfg1)
    assert [(r.start, r.end) for r in regions1] == [(99, 100)]


def test_argmax_rule_is_narrower():
    rng = np.random.default_rng(3)
    n = 390
    inc = rng.standard_normal(n) * math.sqrt(1.0 / n)
    inc[200:210] += 0.9 * math.sqrt(1.0 / n) * 4
    path = path_from_increments(inc)
    union_cfg = wide_open_cfg(3.0, n, w_n=30, region_rule="union")
    argmax_cfg = wide_open_cfg(3.0, n, w_n=30, region_rule="argmax")
    cover = sum(r.end - r.start for r in
                identify_regions(path, unit_vols(n), union_cfg))
    cover_am = sum(r.end - r.start for r in
                   identify_regions(path, unit_vols(n), argmax_cfg))
    assert cover_am <= cover


def test_reset_on_alarm_discards_anchors():
    n = 390
    inc = 2.0 * math.sqrt(1.0 / n)
    cfg = wide_open_cfg(4.0, n, w_n=30, reset_on_alarm=True)
    state = DetectorState(cfg)
    alarms = [state.step(inc, 1.0) for _ in range(12)]
    first = next(i for i, a in enumerate(alarms) if a is not None)
    # after the reset no window spans the alarm point, so the very next
    # steps cannot re-alarm off pre-alarm mass
    assert alarms[first + 1] is None
