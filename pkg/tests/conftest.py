import numpy as np

from driftscan.detector import DetectorConfig
from driftscan.sim_paths import PricePath, SpotVolSeries


def path_from_increments(inc, delta_n=None):
    """PricePath whose returns equal ``inc`` exactly."""
    inc = np.asarray(inc, dtype=float)
    n = len(inc)
    if delta_n is None:
        delta_n = 1.0 / n
    return PricePath(delta_n=delta_n,
                     log_prices=np.concatenate([[0.0], np.cumsum(inc)]))


def unit_vols(n, delta_n=None):
    return SpotVolSeries(delta_n=delta_n or 1.0 / n, values=np.ones(n + 1))


def wide_open_cfg(xi, n, **kw):
    """Detector config whose truncation threshold is far above any test return."""
    kw.setdefault("zeta", 1e6)
    return DetectorConfig(xi=xi, delta_n=1.0 / n, **kw)
