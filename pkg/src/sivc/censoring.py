"""Censoring-distribution estimation and the synthetic response transform.

The censoring survival G(s) = P(C >= s) is estimated by the product-limit
(Kaplan-Meier) estimator with censorings treated as the events of
interest. The curve uses the left-limit convention: the value at s is the
product over jump times strictly below s, so G-hat(s) estimates
P(C >= s) and stays positive at the largest censored observation.

Synthetic responses are the step-function integral

    T*_i = integral_0^inf I(y_i >= s) / G-hat(s) ds,

evaluated exactly as a finite sum over the constancy intervals of G-hat
intersected with [0, y_i]. Uncensored samples (G-hat == 1) reproduce
nonnegative responses bit-for-bit; negative responses map to 0 because
the integrand's support is empty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CalibrationError, UnboundedSyntheticWeightError
from .model import Dataset

__all__ = [
    "SurvivalCurve",
    "estimate_censoring_survival",
    "survival_at",
    "synthetic_responses",
    "calibrate_censoring",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-censoring survival step function.

    ``values[k]`` is the survival probability on the interval just after
    ``jump_times[k]``; before the first jump the curve equals 1.
    """

    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        jumps = _frozen(np.ascontiguousarray(self.jump_times, dtype=float))
        values = _frozen(np.ascontiguousarray(self.values, dtype=float))
        object.__setattr__(self, "jump_times", jumps)
        object.__setattr__(self, "values", values)
        if jumps.ndim != 1 or values.ndim != 1 or jumps.size != values.size:
            raise ValueError("jump_times and values must be equal-length vectors")
        if jumps.size and np.any(np.diff(jumps) <= 0):
            raise ValueError("jump times must be strictly ascending")
        if values.size:
            if np.any((values < 0) | (values > 1)):
                raise ValueError("survival values must lie in [0, 1]")
            if values[0] > 1.0 or np.any(np.diff(values) > 0):
                raise ValueError("survival values must be non-increasing from 1")

    def __call__(self, s: float) -> float:
        return survival_at(self, s)


def estimate_censoring_survival(dataset: Dataset) -> SurvivalCurve:
    """Product-limit estimate of the censoring survival G(s) = P(C >= s).

    Censorings (delta == 0) are the events. At each distinct censoring
    time c with d_c events and n_c at risk (y >= c) the curve picks up a
    factor (1 - d_c / n_c). Rows with delta == 1 tied at c stay in the
    risk set: events are taken to occur just before censorings.
    """
    y_sorted = np.sort(dataset.y)
    censored = dataset.y[dataset.delta == 0]
    if censored.size == 0:
        return SurvivalCurve(jump_times=np.empty(0), values=np.empty(0))
    ctimes, counts = np.unique(censored, return_counts=True)
    at_risk = dataset.n - np.searchsorted(y_sorted, ctimes, side="left")
    factors = 1.0 - counts / at_risk
    return SurvivalCurve(jump_times=ctimes, values=np.cumprod(factors))


def survival_at(curve: SurvivalCurve, s: float) -> float:
    """Left-limit evaluation: the product over jump times strictly below s."""
    idx = int(np.searchsorted(curve.jump_times, s, side="left"))
    return 1.0 if idx == 0 else float(curve.values[idx - 1])


def _segment_table(curve: SurvivalCurve):
    """Positive breakpoints of the curve plus the value on each interval.

    Returns (pts, seg, prefix): the curve is constant equal to seg[k] on
    (pts[k], pts[k+1]] with pts[0] = 0, and prefix[k] is the integral of
    1/curve over [0, pts[k]] (inf once a zero segment is crossed).
    """
    pos = curve.jump_times > 0
    pts = np.concatenate(([0.0], curve.jump_times[pos]))
    n_nonpos = int(np.count_nonzero(~pos))
    start = 1.0 if n_nonpos == 0 else float(curve.values[n_nonpos - 1])
    seg = np.concatenate(([start], curve.values[pos]))
    with np.errstate(divide="ignore"):
        prefix = np.concatenate(([0.0], np.cumsum(np.diff(pts) / seg[:-1])))
    return pts, seg, prefix


def synthetic_responses(dataset: Dataset, curve: SurvivalCurve) -> np.ndarray:
    """Synthetic responses T* for every row of the dataset.

    T*_i integrates 1/G-hat over [0, y_i]; y_i <= 0 gives 0. Raises
    ``UnboundedSyntheticWeightError`` (naming the first offending row)
    when G-hat vanishes strictly inside some [0, y_i).
    """
    pts, seg, prefix = _segment_table(curve)
    y = dataset.y
    out = np.zeros(dataset.n)
    positive = y > 0
    k = np.searchsorted(pts[1:], y[positive], side="left")
    base = prefix[k]
    last_pt = pts[k]
    seg_val = seg[k]
    tail_width = y[positive] - last_pt
    bad = ~np.isfinite(base) | ((tail_width > 0) & (seg_val <= 0.0))
    if np.any(bad):
        rows = np.flatnonzero(positive)[bad]
        raise UnboundedSyntheticWeightError(int(rows[0]))
    tail = np.where(tail_width > 0, tail_width / np.where(seg_val > 0, seg_val, 1.0), 0.0)
    out[positive] = base + tail
    return out


def calibrate_censoring(
    target_rate: float,
    dgp,
    probe_n: int = 100_000,
    seed: int = 0,
    rate_tol: float = 0.002,
) -> float:
    """Upper bound c for C ~ Uniform(0, c) hitting a target censoring rate.

    ``dgp`` must expose ``draw_latent(rng, size)`` returning latent
    responses. One probe sample is drawn; the censoring probability given
    a latent value y is P(C <= y) = clip(y, 0, c) / c, so the achieved
    rate is a continuous, decreasing function of c solved by bisection.
    Deterministic given (seed, probe_n).
    """
    if not 0.0 < target_rate < 1.0:
        raise ValueError(f"target rate must lie in (0, 1) (got {target_rate})")
    if probe_n < 10_000:
        raise ValueError(f"probe_n must be at least 10000 (got {probe_n})")
    draw_latent: Callable = getattr(dgp, "draw_latent", dgp)
    rng = np.random.default_rng(seed)
    latent = np.asarray(draw_latent(rng, probe_n), dtype=float)
    clipped = np.clip(latent, 0.0, None)

    def rate(c: float) -> float:
        return float(np.mean(np.minimum(clipped, c)) / c)

    lo, hi = 1e-6, 1e6
    if not (rate(lo) >= target_rate >= rate(hi)):
        raise CalibrationError(
            f"no c in [{lo}, {hi}] achieves censoring rate {target_rate}"
        )
    c = 0.5 * (lo + hi)
    for _ in range(200):
        c = 0.5 * (lo + hi)
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
        if rate(c) > target_rate:
            lo = c
        else:
            hi = c
    achieved = rate(c)
    if abs(achieved - target_rate) > rate_tol:
        raise CalibrationError(
            f"bisection stalled: achieved rate {achieved:.4f} vs target {target_rate}"
        )
    return float(c)
