"""Forecast error metrics and net-load composition."""

from __future__ import annotations

import numpy as np

from .errors import AllPointsExcluded, LengthMismatch

MAPE_FLOOR = 1e-6


def _pair(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    f = np.asarray(forecast, dtype=float)
    if a.shape != f.shape or a.ndim != 1:
        raise LengthMismatch(f"actual has shape {a.shape}, forecast has shape {f.shape}")
    if a.size == 0:
        raise LengthMismatch("metrics need at least one point")
    return a, f


def mape_with_exclusions(actual, forecast, floor: float = MAPE_FLOOR) -> tuple[float, int]:
    """MAPE in percent plus the number of points skipped for ``|actual| < floor``."""
    a, f = _pair(actual, forecast)
    keep = np.abs(a) >= floor
    if not keep.any():
        raise AllPointsExcluded(f"all {a.size} actual values are below {floor}")
    ratios = np.abs(a[keep] - f[keep]) / np.abs(a[keep])
    return 100.0 * float(np.mean(ratios)), int(a.size - keep.sum())


def mape(actual, forecast, floor: float = MAPE_FLOOR) -> float:
    """Mean absolute percentage error (percent) over points with ``|actual| >= floor``."""
    return mape_with_exclusions(actual, forecast, floor)[0]


def rmse(actual, forecast) -> float:
    a, f = _pair(actual, forecast)
    return float(np.sqrt(np.mean((a - f) ** 2)))


def net_load(load, pv) -> np.ndarray:
    """Load minus PV generation; negative values are kept."""
    load = np.asarray(load, dtype=float)
    pv = np.asarray(pv, dtype=float)
    if load.shape != pv.shape:
        raise LengthMismatch(f"load has shape {load.shape}, pv has shape {pv.shape}")
    return load - pv
