"""Domain types for censored single-index varying-coefficient data.

An observation is one ``(y, delta, x, t)`` record: the observed response
(minimum of the latent response and the censoring time), the event
indicator (1 = uncensored), a covariate vector of length ``d``, and an
effect modifier in [0, 1]. Coefficient direction curves are stored as
unit vectors (positive first component) sampled on a grid over [0, 1].

All types are immutable after construction and all functions here are
pure, so everything is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateDirectionError,
    UnidentifiableSignError,
    ValidationError,
)

__all__ = [
    "CensoredObservation",
    "Dataset",
    "UnitDirection",
    "CoefficientCurves",
    "normalize_direction",
    "validate_dataset",
    "evaluate_curves",
    "censoring_rate",
]

UNIT_NORM_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CensoredObservation:
    """One record: observed response, event indicator, covariates, modifier."""

    y: float
    delta: int
    x: tuple[float, ...]
    t: float

    def __post_init__(self):
        problems = _row_problems(self.y, self.delta, self.x, self.t)
        if problems:
            raise ValidationError([(None, msg) for msg in problems])
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "t", float(self.t))


def _row_problems(y, delta, x, t) -> list[str]:
    problems = []
    try:
        yv = float(y)
        if not np.isfinite(yv):
            problems.append(f"response must be finite (got {y!r})")
    except (TypeError, ValueError):
        problems.append(f"response must be a real number (got {y!r})")
    if delta not in (0, 1, 0.0, 1.0):
        problems.append(f"delta must be 0 or 1 (got {delta!r})")
    try:
        tv = float(t)
        if not np.isfinite(tv) or not 0.0 <= tv <= 1.0:
            problems.append(f"modifier t must lie in [0, 1] (got {t!r})")
    except (TypeError, ValueError):
        problems.append(f"modifier t must be a real number (got {t!r})")
    try:
        xv = np.asarray(x, dtype=float)
        if xv.ndim != 1 or xv.size < 1:
            problems.append("covariate vector must be one-dimensional and non-empty")
        elif not np.all(np.isfinite(xv)):
            problems.append("covariates must be finite")
    except (TypeError, ValueError):
        problems.append(f"covariates must be real numbers (got {x!r})")
    return problems


@dataclass(frozen=True)
class Dataset:
    """Validated sample of censored observations with common dimension d.

    Arrays are stored column-wise (``y``, ``delta``, ``x``, ``t``) and are
    read-only; ``observations`` materializes row objects on demand.
    """

    y: np.ndarray
    delta: np.ndarray
    x: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        y = _frozen(np.ascontiguousarray(self.y, dtype=float))
        delta = _frozen(np.ascontiguousarray(self.delta, dtype=int))
        x = _frozen(np.ascontiguousarray(self.x, dtype=float))
        t = _frozen(np.ascontiguousarray(self.t, dtype=float))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        n = y.shape[0]
        problems = []
        if n < 2:
            problems.append((None, f"dataset needs at least 2 rows (got {n})"))
        if x.ndim != 2 or x.shape[0] != n or delta.shape != (n,) or t.shape != (n,):
            problems.append((None, "column arrays must share the same row count"))
        elif x.shape[1] < 1:
            problems.append((None, "covariate dimension d must be at least 1"))
        else:
            if not np.all(np.isfinite(y)):
                problems.append((None, "responses must be finite"))
            if not np.all((delta == 0) | (delta == 1)):
                problems.append((None, "delta must be 0 or 1"))
            if not (np.all(np.isfinite(t)) and np.all((t >= 0) & (t <= 1))):
                problems.append((None, "modifier t must lie in [0, 1]"))
            if not np.all(np.isfinite(x)):
                problems.append((None, "covariates must be finite"))
        if problems:
            raise ValidationError(problems)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def observations(self) -> tuple[CensoredObservation, ...]:
        return tuple(
            CensoredObservation(
                y=float(self.y[i]),
                delta=int(self.delta[i]),
                x=tuple(self.x[i]),
                t=float(self.t[i]),
            )
            for i in range(self.n)
        )


@dataclass(frozen=True)
class UnitDirection:
    """Vector of unit Euclidean norm with strictly positive first component."""

    components: np.ndarray

    def __post_init__(self):
        c = _frozen(np.ascontiguousarray(self.components, dtype=float))
        object.__setattr__(self, "components", c)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("direction must be a non-empty vector")
        norm = float(np.linalg.norm(c))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"direction norm {norm!r} is not 1 within {UNIT_NORM_TOL}")
        if not c[0] > 0:
            raise ValueError("first component must be strictly positive")

    @property
    def d(self) -> int:
        return self.components.size


@dataclass(frozen=True)
class CoefficientCurves:
    """Direction curves sampled on an ascending grid over [0, 1]."""

    grid: np.ndarray
    directions: tuple[UnitDirection, ...] = field(repr=False)

    def __post_init__(self):
        grid = _frozen(np.ascontiguousarray(self.grid, dtype=float))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "directions", tuple(self.directions))
        if grid.ndim != 1 or grid.size < 1:
            raise ValueError("grid must be a non-empty vector")
        if not np.all((grid >= 0) & (grid <= 1)):
            raise ValueError("grid points must lie in [0, 1]")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly ascending")
        if len(self.directions) != grid.size:
            raise ValueError("one direction required per grid point")
        dims = {u.d for u in self.directions}
        if len(dims) > 1:
            raise ValueError("directions must share a common dimension")
        matrix = np.vstack([u.components for u in self.directions])
        object.__setattr__(self, "_matrix", _frozen(matrix))

    @property
    def d(self) -> int:
        return self.directions[0].d

    @property
    def matrix(self) -> np.ndarray:
        """Grid-by-dimension array of direction components."""
        return self._matrix


def normalize_direction(v: Sequence[float] | np.ndarray) -> UnitDirection:
    """Scale ``v`` to unit norm and flip its sign so the first component
    is positive.

    Raises ``DegenerateDirectionError`` for the zero vector and
    ``UnidentifiableSignError`` when the first component is zero (the
    sign convention is undefined there; callers choose a tie-break).
    """
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("direction must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("direction components must be finite")
    scale = float(np.max(np.abs(arr)))
    if scale == 0.0:
        raise DegenerateDirectionError("degenerate direction: zero vector")
    if arr[0] == 0.0:
        raise UnidentifiableSignError(
            "unidentifiable sign: first component is zero"
        )
    scaled = arr / scale
    unit = scaled / np.linalg.norm(scaled)
    if unit[0] == 0.0:
        # |v1| below the underflow threshold relative to ||v||
        raise UnidentifiableSignError(
            "unidentifiable sign: first component underflows to zero"
        )
    if unit[0] < 0:
        unit = -unit
    return UnitDirection(components=unit)


def validate_dataset(
    rows: Iterable[CensoredObservation | Sequence],
) -> Dataset:
    """Build a ``Dataset`` from raw rows, rejecting malformed input.

    Rows may be ``CensoredObservation`` instances or ``(y, delta, x, t)``
    sequences. All violations are collected into one ``ValidationError``
    that names each offending row; malformed data is never repaired.
    """
    ys, deltas, xs, ts = [], [], [], []
    problems: list[tuple[int | None, str]] = []
    for i, row in enumerate(rows):
        if isinstance(row, CensoredObservation):
            y, delta, x, t = row.y, row.delta, row.x, row.t
        else:
            try:
                y, delta, x, t = row
            except (TypeError, ValueError):
                problems.append((i, f"expected (y, delta, x, t), got {row!r}"))
                continue
        row_problems = _row_problems(y, delta, x, t)
        if row_problems:
            problems.extend((i, msg) for msg in row_problems)
            continue
        ys.append(float(y))
        deltas.append(int(delta))
        xs.append(np.asarray(x, dtype=float))
        ts.append(float(t))
    if not problems:
        dims = {x.size for x in xs}
        if len(dims) > 1:
            problems.append((None, f"ragged covariates: found lengths {sorted(dims)}"))
        elif len(ys) < 2:
            problems.append((None, f"dataset needs at least 2 rows (got {len(ys)})"))
    if problems:
        raise ValidationError(problems)
    return Dataset(
        y=np.array(ys),
        delta=np.array(deltas),
        x=np.vstack(xs),
        t=np.array(ts),
    )


def evaluate_curves(curves: CoefficientCurves, t: float) -> np.ndarray:
    """Direction at modifier value ``t``.

    Exact grid hits return the stored direction. Between grid points the
    two bracketing directions are linearly interpolated and re-normalized,
    which keeps the result on the unit sphere. Outside the grid range the
    nearest end direction is used.
    """
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"modifier t must lie in [0, 1] (got {t})")
    grid = curves.grid
    idx = int(np.searchsorted(grid, t, side="left"))
    if idx < grid.size and grid[idx] == t:
        return curves.directions[idx].components
    if idx == 0:
        return curves.directions[0].components
    if idx == grid.size:
        return curves.directions[-1].components
    t_lo, t_hi = grid[idx - 1], grid[idx]
    w = (t - t_lo) / (t_hi - t_lo)
    blend = (1.0 - w) * curves.directions[idx - 1].components + w * curves.directions[
        idx
    ].components
    return normalize_direction(blend).components


def censoring_rate(dataset: Dataset) -> float:
    """Fraction of censored rows (delta == 0)."""
    return float(np.count_nonzero(dataset.delta == 0) / dataset.n)
