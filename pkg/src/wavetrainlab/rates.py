"""Error series containers and log-log decay-rate fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["ErrorSeries", "RateFit", "fit_decay_rate"]


@dataclass(eq=False)
class ErrorSeries:
    """Renormalized error magnitudes along a trajectory."""

    times: np.ndarray
    sup_err: np.ndarray
    weighted_err: np.ndarray
    exponent: float = 0.0  # renormalization power of t applied to the data
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.sup_err, dtype=float)
        w = np.asarray(self.weighted_err, dtype=float)
        if not (t.size == s.size == w.size):
            raise ValueError("times and error arrays must have equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sup_err", s)
        object.__setattr__(self, "weighted_err", w)


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float
    window: tuple[float, float]


def fit_decay_rate(series: ErrorSeries, t_min: float = 0.0, use: str = "sup") -> RateFit:
    """Least-squares slope of log(err) against log(t) for t >= t_min."""
    err = series.sup_err if use == "sup" else series.weighted_err
    mask = series.times >= t_min
    t = series.times[mask]
    e = err[mask]
    if t.size < 5:
        raise ValueError(f"need >= 5 points with t >= {t_min}, got {t.size}")
    if np.any(e <= 0) or np.any(t <= 0):
        raise ValueError("decay-rate fit requires positive times and errors")
    lt, le = np.log(t), np.log(e)
    A = np.column_stack([lt, np.ones_like(lt)])
    coef, *_ = np.linalg.lstsq(A, le, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - le) ** 2)))
    return RateFit(float(coef[0]), float(coef[1]), resid, (float(t[0]), float(t[-1])))
