"""Decay-rate fits and monotonicity audits of time series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import WindowError

MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class DecayFit:
    t0: float
    t1: float
    slope: float
    intercept: float
    residual: float  # rms of the log-log fit
    n: int


def fit_decay(t, values, window: tuple[float, float], min_samples: int = MIN_FIT_SAMPLES) -> DecayFit:
    """Least-squares slope of log(values) against log(1 + t) on the window."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(values, dtype=float)
    t0, t1 = window
    m = (t >= t0) & (t <= t1)
    if m.sum() < min_samples:
        raise WindowError(f"window [{t0:g}, {t1:g}] holds {int(m.sum())} samples, need {min_samples}")
    if np.any(y[m] <= 0):
        raise WindowError("decay fit needs positive values")
    x = np.log1p(t[m])
    ly = np.log(y[m])
    slope, intercept = np.polyfit(x, ly, 1)
    res = float(np.sqrt(np.mean((ly - (slope * x + intercept)) ** 2)))
    return DecayFit(float(t0), float(t1), float(slope), float(intercept), res, int(m.sum()))


@dataclass(frozen=True)
class MonotonicityReport:
    n_steps: int
    violations: int
    worst: float  # max relative increase (negative when strictly decreasing)
    tolerance: float
    refinement_ok: bool | None = None  # set when a finer series is supplied
    worst_fine: float | None = None

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.refinement_ok is not False


def _worst(series, floor):
    s = np.asarray(series, dtype=float)
    return (s[1:] - s[:-1]) / (np.abs(s[:-1]) + floor)


def monotonicity_audit(series, per_step_tolerance: float, floor: float = 1e-300, fine=None) -> MonotonicityReport:
    """Count steps whose relative increase exceeds the tolerance.

    With ``fine`` (the same quantity on a refined grid) the report also says
    whether the positive part of the worst violation at least halves.
    """
    s = np.asarray(series, dtype=float)
    if s.size < 2:
        raise ValueError("monotonicity audit needs at least two samples")
    rel = _worst(s, floor)
    worst = float(rel.max())
    viol = int(np.sum(rel > per_step_tolerance))
    ref_ok = worst_f = None
    if fine is not None:
        worst_f = float(_worst(fine, floor).max())
        ref_ok = max(worst_f, 0.0) <= 0.5 * max(worst, 0.0)
    return MonotonicityReport(s.size - 1, viol, worst, per_step_tolerance, ref_ok, worst_f)
