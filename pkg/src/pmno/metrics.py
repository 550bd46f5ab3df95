"""Relative RMSE curves and valid prediction time."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

DEFAULT_TAU = 0.1


@dataclass
class ErrorCurve:
    times: np.ndarray
    values: np.ndarray
    train_horizon: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ContractError("times and values differ in length")
        if np.any(self.values < 0):
            raise ContractError("error values must be nonnegative")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ContractError("times must be strictly increasing")

    def window_mean(self, t_lo: float, t_hi: float) -> float:
        sel = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        return float(self.values[sel].mean())


def _as_stack(traj) -> np.ndarray:
    if hasattr(traj, "array"):
        return traj.array()
    return np.asarray([getattr(f, "values", f) for f in traj], dtype=np.float64)


def rmse_curve(pred, ref, times=None, train_horizon: float | None = None) -> ErrorCurve:
    """eps(t_i) = ||pred_i - ref_i|| / ||ref_i||, channels pooled.

    ``pred`` and ``ref`` are trajectories, sequences of fields, or stacked
    arrays with the snapshot index first.
    """
    P, R = _as_stack(pred), _as_stack(ref)
    if P.shape != R.shape:
        raise ContractError(f"prediction layout {P.shape} differs from reference {R.shape}")
    if times is None:
        times = ref.times if hasattr(ref, "times") else np.arange(len(R), dtype=np.float64)
    axes = tuple(range(1, P.ndim))
    num = np.sqrt(np.sum((P - R) ** 2, axis=axes))
    den = np.sqrt(np.sum(R**2, axis=axes))
    if np.any(den == 0):
        raise ContractError("relative error undefined: reference snapshot has zero norm")
    return ErrorCurve(np.asarray(times, dtype=np.float64), num / den, train_horizon)


def valid_time(curve: ErrorCurve, tau: float = DEFAULT_TAU) -> float | None:
    """First time with eps >= tau, or None if the threshold is never reached."""
    if tau <= 0:
        raise ContractError(f"tau must be positive, got {tau}")
    hits = np.flatnonzero(curve.values >= tau)
    return None if hits.size == 0 else float(curve.times[hits[0]])
