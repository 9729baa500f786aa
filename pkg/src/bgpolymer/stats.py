"""Replica-level estimators: standard errors, slopes, bootstrap intervals."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["mean_se", "var_se", "diff_se", "ols_slope", "bootstrap_slope"]


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()) if x.size else math.nan, math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def var_se(x) -> tuple[float, float]:
    """Unbiased sample variance and its standard error from the fourth central moment."""
    x = np.asarray(x, dtype=float)
    R = x.size
    if R < 2:
        return math.nan, math.nan
    d = x - x.mean()
    s2 = float(d @ d / (R - 1))
    if R < 4:
        return s2, math.nan
    m4 = float(np.mean(d**4))
    v = (m4 - (R - 3) / (R - 1) * s2 * s2) / R
    return s2, math.sqrt(max(v, 0.0))


def diff_se(influence) -> float:
    """Standard error of a smooth statistic given its per-replica influence values."""
    influence = np.asarray(influence, dtype=float)
    if influence.size < 2:
        return math.nan
    return float(influence.std(ddof=1) / math.sqrt(influence.size))


def ols_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


def bootstrap_slope(logN, samples, stat, rng: np.random.Generator, n_boot: int = 1000, level: float = 0.95):
    """Percentile CI of the slope of log stat(sample_N) against log N.

    ``samples`` holds one replica array per grid point; each bootstrap round
    resamples every grid point's replicas independently. Rounds whose
    statistic is nonpositive at some grid point have no log and are dropped.
    """
    ys = np.empty((n_boot, len(samples)))
    for k, s in enumerate(samples):
        s = np.asarray(s, dtype=float)
        idx = rng.integers(0, s.size, size=(n_boot, s.size))
        v = stat(s[idx])
        ys[:, k] = np.log(np.where(v > 0, v, np.nan))
    x = np.asarray(logN, dtype=float)
    xc = x - x.mean()
    slopes = (ys - ys.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
    slopes = slopes[np.isfinite(slopes)]
    if slopes.size < 2:
        return math.nan, math.nan, math.nan
    lo, hi = np.quantile(slopes, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi), float(slopes.std(ddof=1))
