"""Steady-state detection by slope hypothesis testing.

A window is called steady when the ordinary-least-squares slope of the
signal over time is statistically indistinguishable from zero: two-sided
Student t-test with n-2 degrees of freedom, confidence level ``alpha``.
The network verdict requires every watched channel to pass individually.

Stateless: callers own the buffers, every call is a pure function of its
arguments, so concurrent use needs no locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import defaults as dflt

__all__ = [
    "SSDConfig",
    "SSVerdict",
    "WindowTooShort",
    "ZeroVariance",
    "slope_t_test",
    "network_steady",
]


class WindowTooShort(ValueError):
    """Fewer than three samples: residual dof n-2 would be < 1."""


class ZeroVariance(ValueError):
    """Degenerate time axis: all samples share one timestamp."""


@dataclass(frozen=True)
class SSDConfig:
    """Detector settings.

    signals are column indices into the measurement vector; the default
    picks the three liquid flowrates.
    """

    window_s: float = dflt.SSD_WINDOW_S
    alpha: float = dflt.SSD_ALPHA
    signals: tuple[int, ...] = (4, 5, 6)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.window_s < 3.0 * dflt.SENSOR_PERIOD:
            raise ValueError(
                f"window_s={self.window_s} shorter than three samples"
            )
        if not self.signals:
            raise ValueError("signals must name at least one channel")


@dataclass(frozen=True)
class SSVerdict:
    per_signal: tuple[bool, ...]
    steady: bool
    slope_t_stats: tuple[float, ...]


def slope_t_test(t, y, alpha: float = dflt.SSD_ALPHA):
    """Test one signal window for zero trend.

    Returns ``(is_steady, t_stat)``.  A perfectly constant signal is
    steady by convention (t_stat 0); a perfectly explained nonzero trend
    reports an infinite statistic.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = t.size
    if n < 3 or y.size != n:
        raise WindowTooShort(f"need >= 3 paired samples, got {n}/{y.size}")
    if np.ptp(y) == 0.0:
        return True, 0.0

    t_centered = t - t.mean()
    sxx = float(t_centered @ t_centered)
    if sxx <= 0.0:
        raise ZeroVariance("time axis has no spread")

    slope = float(t_centered @ (y - y.mean())) / sxx
    resid = y - y.mean() - slope * t_centered
    sse = float(resid @ resid)
    if sse <= 0.0:
        t_stat = math.copysign(math.inf, slope)
    else:
        t_stat = slope / math.sqrt(sse / (n - 2) / sxx)

    t_crit = stats.t.ppf(0.5 + alpha / 2.0, n - 2)
    return bool(abs(t_stat) <= t_crit), float(t_stat)


def network_steady(t, window, cfg: SSDConfig | None = None) -> SSVerdict:
    """Aggregate verdict over the watched columns of a sample window.

    window has one row per sample; cfg.signals picks the columns.
    """
    if cfg is None:
        cfg = SSDConfig()
    window = np.asarray(window, dtype=float)
    flags, tstats = [], []
    for j in cfg.signals:
        ok, ts = slope_t_test(t, window[:, j], cfg.alpha)
        flags.append(ok)
        tstats.append(ts)
    return SSVerdict(tuple(flags), all(flags), tuple(tstats))
