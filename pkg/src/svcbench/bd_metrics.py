"""Bjontegaard deltas between two rate-distortion curves.

Cubic fit in the log-rate domain (exact interpolation for the classical
four-point sweep, least squares beyond that), integrated analytically over
the overlapping interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSNR_ON_LOGRATE = "psnr_on_lograte"
LOGRATE_ON_PSNR = "lograte_on_psnr"


@dataclass(frozen=True)
class RdPoint:
    rate_kbps: float
    psnr_db: float

    def __post_init__(self):
        if self.rate_kbps <= 0:
            raise ValueError("rates must be strictly positive")


def _axes(points, axis):
    rates = np.array([p.rate_kbps for p in points], dtype=float)
    psnrs = np.array([p.psnr_db for p in points], dtype=float)
    if axis == PSNR_ON_LOGRATE:
        return np.log10(rates), psnrs
    if axis == LOGRATE_ON_PSNR:
        return psnrs, np.log10(rates)
    raise ValueError(f"unknown axis {axis!r}")


def fit_rd_poly(points, axis=PSNR_ON_LOGRATE) -> np.ndarray:
    """Cubic fit (highest coefficient first, np.polyval convention)."""
    if len(points) < 4:
        raise ValueError("a curve needs at least 4 points")
    x, y = _axes(points, axis)
    if len(set(x.tolist())) != len(x):
        raise ValueError("duplicate abscissae in curve")
    if len(points) == 4:
        return np.linalg.solve(np.vander(x, 4), y)
    return np.polyfit(x, y, 3)


def _mean_gap(ref_points, test_points, axis) -> float:
    ref_x, _ = _axes(ref_points, axis)
    test_x, _ = _axes(test_points, axis)
    lo = max(ref_x.min(), test_x.min())
    hi = min(ref_x.max(), test_x.max())
    if not hi > lo:
        raise ValueError("curves do not overlap")
    p_ref = np.polyint(fit_rd_poly(ref_points, axis))
    p_test = np.polyint(fit_rd_poly(test_points, axis))
    int_ref = np.polyval(p_ref, hi) - np.polyval(p_ref, lo)
    int_test = np.polyval(p_test, hi) - np.polyval(p_test, lo)
    return float((int_test - int_ref) / (hi - lo))


def bd_psnr(ref_points, test_points) -> float:
    """Mean PSNR gap (dB) of test over ref across the shared log-rate span."""
    return _mean_gap(ref_points, test_points, PSNR_ON_LOGRATE)


def bd_rate(ref_points, test_points) -> float:
    """Mean rate gap in percent (negative means the test curve is cheaper)."""
    delta = _mean_gap(ref_points, test_points, LOGRATE_ON_PSNR)
    return (10.0 ** delta - 1.0) * 100.0
