"""Numba-compiled inner loops for path simulation and window scanning.

Everything here operates on plain float64 arrays.  The public API lives in
``sim_paths`` and ``detector``; these kernels exist so that Monte Carlo runs
with thousands of replications finish in seconds instead of hours.
"""

import numba
import numpy as np

# Sentinel window length meaning "no maximum window" (scan back to index 0).
UNBOUNDED = np.iinfo(np.int64).max // 4


@numba.njit(cache=True, nogil=True)
def heston_day(n, delta_n, kappa_day, theta, vov_day, rho, drift_day,
               ret_var_scale, v0, x0, z_price, z_vol, jump_counts, z_jump,
               jump_sd):
    """Euler step a Heston day on an equispaced grid of n intervals.

    Variance is kept in annualized units and clamped at zero (full
    truncation), so the returned path is nonnegative everywhere.  The
    per-step return variance is ``v * delta_n * ret_var_scale`` with
    ``ret_var_scale = 1 / days_per_year``.
    """
    x = np.empty(n + 1)
    v = np.empty(n + 1)
    x[0] = x0
    v[0] = v0
    sqdt = np.sqrt(delta_n)
    for i in range(n):
        vi = v[i]
        sig_step = np.sqrt(vi * delta_n * ret_var_scale)
        zc = rho * z_price[i] + np.sqrt(1.0 - rho * rho) * z_vol[i]
        jump = 0.0
        if jump_counts[i] > 0:
            jump = np.sqrt(jump_counts[i]) * jump_sd * z_jump[i]
        x[i + 1] = x[i] + drift_day * delta_n + sig_step * z_price[i] + jump
        v_next = vi + kappa_day * (theta - vi) * delta_n \
            + vov_day * np.sqrt(vi) * sqdt * zc
        v[i + 1] = v_next if v_next > 0.0 else 0.0
    return x, v


@numba.njit(cache=True, nogil=True)
def first_alarm(prefix, delta_n, xi, w_n, r_n, l_start, warmup):
    """First l in (l_start, len(prefix)-1] whose window scan exceeds xi.

    ``prefix[l]`` holds the cumulative sum of standardized increments up to
    and including increment l (prefix[0] = 0).  Admissible window starts are
    ``max(0, l - w_n - r_n) <= k < l - r_n``.  Returns (l, k_star, stat) or
    (-1, -1, 0.0) if no admissible window exceeds the threshold.  Ties in the
    maximizing k resolve to the smallest k.
    """
    n_last = len(prefix) - 1
    for l in range(l_start + 1, n_last + 1):
        if l <= warmup:
            continue
        k_lo = l - w_n - r_n
        if k_lo < 0:
            k_lo = 0
        k_hi = l - r_n  # exclusive
        if k_hi > l:
            k_hi = l
        if k_hi <= k_lo:
            continue
        best = 0.0
        best_k = -1
        sl = prefix[l]
        for k in range(k_lo, k_hi):
            stat = abs(sl - prefix[k]) / np.sqrt((l - k) * delta_n)
            if stat > best:
                best = stat
                best_k = k
        if best > xi:
            return l, best_k, best
    return -1, -1, 0.0


@numba.njit(cache=True, nogil=True)
def scan_all(prefix, delta_n, w_n, r_n, warmup):
    """Per-index scan maxima: for every l return (max stat, argmax k).

    Indices l <= warmup or with an empty admissible set get stat 0 and k -1.
    """
    n_last = len(prefix) - 1
    stats = np.zeros(n_last + 1)
    kstars = np.full(n_last + 1, -1, dtype=np.int64)
    for l in range(1, n_last + 1):
        if l <= warmup:
            continue
        k_lo = l - w_n - r_n
        if k_lo < 0:
            k_lo = 0
        k_hi = l - r_n
        if k_hi > l:
            k_hi = l
        if k_hi <= k_lo:
            continue
        best = 0.0
        best_k = -1
        sl = prefix[l]
        for k in range(k_lo, k_hi):
            stat = abs(sl - prefix[k]) / np.sqrt((l - k) * delta_n)
            if stat > best:
                best = stat
                best_k = k
        stats[l] = best
        kstars[l] = best_k
    return stats, kstars


@numba.njit(cache=True, nogil=True)
def exceed_cover(prefix, delta_n, xi, w_n, r_n, warmup):
    """Mark every index covered by some admissible window with stat > xi.

    Returns (covered, peak) where ``covered[i]`` flags membership in at
    least one exceeding window [k, l] (both endpoints inclusive) and
    ``peak[i]`` is the largest exceeding-window statistic covering i.
    """
    n_last = len(prefix) - 1
    covered = np.zeros(n_last + 1, dtype=np.bool_)
    peak = np.zeros(n_last + 1)
    for l in range(1, n_last + 1):
        if l <= warmup:
            continue
        k_lo = l - w_n - r_n
        if k_lo < 0:
            k_lo = 0
        k_hi = l - r_n
        if k_hi > l:
            k_hi = l
        sl = prefix[l]
        for k in range(k_lo, k_hi):
            stat = abs(sl - prefix[k]) / np.sqrt((l - k) * delta_n)
            if stat > xi:
                for i in range(k, l + 1):
                    covered[i] = True
                    if stat > peak[i]:
                        peak[i] = stat
    return covered, peak


@numba.njit(cache=True, nogil=True)
def argmax_cover(prefix, delta_n, xi, w_n, r_n, warmup):
    """Like exceed_cover, but covering only each index's maximizing window."""
    stats, kstars = scan_all(prefix, delta_n, w_n, r_n, warmup)
    n_last = len(prefix) - 1
    covered = np.zeros(n_last + 1, dtype=np.bool_)
    peak = np.zeros(n_last + 1)
    for l in range(1, n_last + 1):
        if stats[l] > xi:
            for i in range(kstars[l], l + 1):
                covered[i] = True
                if stats[l] > peak[i]:
                    peak[i] = stats[l]
    return covered, peak
