"""Two-stage fit for the censored single-index varying-coefficient model.

Stage 1 estimates the direction curve on a grid of modifier values by
local profile least squares: at each t0 the candidate direction theta is
scored by

    M(theta; t0) = (n h2)^-1 sum_i (y_i - g_loo(theta.x_i; theta))^2
                   K((t_i - t0) / h2),

where g_loo is the leave-one-out product-kernel smoother of y on the
candidate index and the modifier. Leaving row i out stops the smoother
from collapsing onto its own response as h1 shrinks, which would make
the objective trivially small for any direction. Because the observed
response keeps the single-index structure of the latent one (see
``sivc.theory``), Stage 1 runs on the observed responses directly.

The unit-norm, positive-first-component constraint is enforced by
construction through a spherical-angle parameterization: the open
hemisphere maps to the open box (-pi/2, pi/2)^(d-1) and Nelder-Mead
runs on the angles, warm-started along the grid sweep.

Stage 2 computes the synthetic responses from the Kaplan-Meier censoring
survival, projects each covariate vector onto the fitted direction at
its modifier value, and smooths the synthetic responses on that index by
Nadaraya-Watson to estimate the link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .censoring import estimate_censoring_survival, synthetic_responses
from .errors import (
    EstimationError,
    InsufficientLocalSampleError,
    NoLocalDataError,
    SivcError,
)
from .model import (
    CoefficientCurves,
    Dataset,
    UnitDirection,
    evaluate_curves,
    normalize_direction,
)
from .smoothing import (
    WEIGHT_FLOOR,
    Bandwidths,
    KernelSpec,
    kernel_values,
    nw_estimate,
    rule_of_thumb_bandwidth,
    select_bandwidths,
)

__all__ = [
    "OptimizerConfig",
    "FitConfig",
    "LinkEstimate",
    "DirectionFit",
    "ModelFit",
    "direction_from_angles",
    "angles_from_direction",
    "local_objective",
    "fit_direction_at",
    "fit_coefficient_curves",
    "compute_index",
    "fit_link",
    "fit_model",
]

_ANGLE_BOX = math.pi / 2 - 1e-9
_SIMPLEX_STEP = 0.1
_XATOL = 1e-5


@dataclass(frozen=True)
class OptimizerConfig:
    """Nelder-Mead settings: restart count, iteration cap, objective tolerance."""

    restarts: int = 4
    max_iter: int = 150
    tol: float = 1e-8

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class FitConfig:
    """Settings for the two-stage fit."""

    t_grid_size: int = 21
    link_grid: tuple[float, float, int] = (-0.5, 0.5, 100)
    bandwidths: Bandwidths | str = "auto"
    kernel: KernelSpec = KernelSpec("epanechnikov")
    optimizer: OptimizerConfig = OptimizerConfig()

    def __post_init__(self):
        if self.t_grid_size < 2:
            raise ValueError("t_grid_size must be at least 2")
        lo, hi, count = self.link_grid
        object.__setattr__(self, "link_grid", (float(lo), float(hi), int(count)))
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("link_grid min must be below max")
        if count < 2:
            raise ValueError("link_grid count must be at least 2")
        if not (self.bandwidths == "auto" or isinstance(self.bandwidths, Bandwidths)):
            raise ValueError('bandwidths must be a Bandwidths instance or "auto"')

    @property
    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.t_grid_size)

    @property
    def u_grid(self) -> np.ndarray:
        lo, hi, count = self.link_grid
        return np.linspace(lo, hi, count)


@dataclass(frozen=True)
class LinkEstimate:
    """Link values on an ascending index grid; NaN marks "no local data"."""

    u_grid: np.ndarray
    m_hat: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        u = np.ascontiguousarray(self.u_grid, dtype=float)
        m = np.ascontiguousarray(self.m_hat, dtype=float)
        dfn = np.ascontiguousarray(self.defined, dtype=bool)
        for name, arr in (("u_grid", u), ("m_hat", m), ("defined", dfn)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (u.shape == m.shape == dfn.shape) or u.ndim != 1:
            raise ValueError("u_grid, m_hat, defined must be equal-length vectors")
        if np.any(np.diff(u) <= 0):
            raise ValueError("u_grid must be strictly ascending")
        if not np.all(np.isfinite(m[dfn])):
            raise ValueError("defined link estimates must be finite")


@dataclass(frozen=True)
class DirectionFit:
    """One grid point's direction estimate plus optimizer diagnostics."""

    direction: UnitDirection
    objective: float
    iterations: int
    converged: bool
    skipped_rows: int


@dataclass(frozen=True)
class ModelFit:
    """Assembled two-stage estimate."""

    curves: CoefficientCurves
    link: LinkEstimate
    synthetic: np.ndarray
    bandwidths: Bandwidths
    diagnostics: dict = field(repr=False)
    config: FitConfig = field(repr=False)


def direction_from_angles(angles: Sequence[float] | np.ndarray) -> np.ndarray:
    """Map d-1 angles in (-pi/2, pi/2) to a unit vector with positive
    first component (bijective onto the open hemisphere)."""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    v = np.array([1.0])
    for a in angles:
        v = np.concatenate((v * math.cos(a), [math.sin(a)]))
    return v


def angles_from_direction(direction: UnitDirection) -> np.ndarray:
    """Inverse of ``direction_from_angles``."""
    v = np.array(direction.components, dtype=float)
    d = v.size
    angles = np.zeros(d - 1)
    for k in range(d - 1, 1, -1):
        a = math.asin(float(np.clip(v[k], -1.0, 1.0)))
        angles[k - 1] = a
        cos_a = math.cos(a)
        if cos_a <= 0:
            raise ValueError("direction lies on the hemisphere boundary")
        v = v[:k] / cos_a
    if d > 1:
        angles[0] = math.atan2(v[1], v[0])
    return angles


class _LocalObjective:
    """Profile least-squares objective at one t0, vectorized over the
    rows that carry modifier weight."""

    def __init__(self, dataset: Dataset, t0: float, bw: Bandwidths, spec: KernelSpec):
        if not 0.0 <= float(t0) <= 1.0:
            raise ValueError(f"t0 must lie in [0, 1] (got {t0})")
        kt = kernel_values(spec, (dataset.t - t0) / bw.h2)
        active = kt > 0
        m = int(np.count_nonzero(active))
        if m < 2:
            raise InsufficientLocalSampleError(
                f"insufficient local sample at t0={t0}: {m} rows carry weight"
            )
        self.x = dataset.x[active]
        self.y = dataset.y[active]
        self.kt = kt[active]
        self.h1 = bw.h1
        self.spec = spec
        self.norm = dataset.n * bw.h2
        self.k0 = float(kernel_values(spec, np.asarray(0.0)))
        self.last_skipped = 0

    def value(self, theta_components: np.ndarray) -> float:
        proj = self.x @ theta_components
        w = kernel_values(self.spec, (proj[None, :] - proj[:, None]) / self.h1)
        w *= self.kt[None, :]
        den_loo = w.sum(axis=1) - self.k0 * self.kt
        num_loo = w @ self.y - self.k0 * self.kt * self.y
        valid = den_loo >= WEIGHT_FLOOR
        self.last_skipped = int(np.count_nonzero(~valid))
        resid = self.y[valid] - num_loo[valid] / den_loo[valid]
        return float(np.sum(self.kt[valid] * resid * resid) / self.norm)


def _resolve_bandwidths(dataset: Dataset, config: FitConfig) -> Bandwidths:
    if isinstance(config.bandwidths, Bandwidths):
        return config.bandwidths
    return select_bandwidths(dataset, config.kernel)


def local_objective(
    dataset: Dataset,
    t0: float,
    theta: UnitDirection,
    bw: Bandwidths,
    spec: KernelSpec,
) -> float:
    """Leave-one-out profile least-squares score of a candidate direction.

    Rows whose leave-one-out smoother has no local data contribute zero;
    their count is available through the fitting diagnostics.
    """
    return _LocalObjective(dataset, t0, bw, spec).value(theta.components)


def _spread_starts(restarts: int, dim: int) -> list[np.ndarray]:
    step = math.pi / restarts
    return [
        np.full(dim, -math.pi / 2 + (i + 0.5) * step) for i in range(restarts)
    ]


def _initial_simplex(a0: np.ndarray) -> np.ndarray:
    verts = [a0]
    for k in range(a0.size):
        v = a0.copy()
        v[k] = v[k] + _SIMPLEX_STEP if v[k] + _SIMPLEX_STEP < _ANGLE_BOX else v[k] - _SIMPLEX_STEP
        verts.append(v)
    return np.asarray(verts)


def fit_direction_at(
    dataset: Dataset,
    t0: float,
    config: FitConfig,
    warm_start: Optional[UnitDirection] = None,
    _bandwidths: Optional[Bandwidths] = None,
) -> DirectionFit:
    """Minimize the local objective over the unit hemisphere at one t0.

    Nelder-Mead runs on the spherical angles from the warm start (if
    given) plus ``restarts`` starting points spread across the angle box.
    Candidates whose objectives agree within 10x the optimizer tolerance
    are tied; ties resolve to the lexicographically smaller angle vector.
    Hitting the iteration cap with the final simplex still spread wider
    than the tolerance is flagged (not raised) in the result.
    """
    if dataset.n < 10:
        raise ValueError(f"direction fitting needs n >= 10 (got {dataset.n})")
    bw = _bandwidths if _bandwidths is not None else _resolve_bandwidths(dataset, config)
    obj = _LocalObjective(dataset, t0, bw, config.kernel)
    if dataset.d == 1:
        direction = UnitDirection(components=np.array([1.0]))
        value = obj.value(direction.components)
        return DirectionFit(direction, value, 0, True, obj.last_skipped)

    def penalized(angles: np.ndarray) -> float:
        excess = np.abs(angles) - _ANGLE_BOX
        if np.any(excess > 0):
            return 1e12 * (1.0 + float(np.sum(np.maximum(excess, 0.0))))
        return obj.value(direction_from_angles(angles))

    starts = []
    if warm_start is not None:
        starts.append(angles_from_direction(warm_start))
    starts.extend(_spread_starts(config.optimizer.restarts, dataset.d - 1))

    best_angles, best_val, best_converged = None, math.inf, False
    total_iters = 0
    tie_tol_base = 10.0 * config.optimizer.tol
    for a0 in starts:
        res = optimize.minimize(
            penalized,
            a0,
            method="Nelder-Mead",
            options={
                "maxiter": config.optimizer.max_iter,
                "xatol": _XATOL,
                "fatol": config.optimizer.tol,
                "initial_simplex": _initial_simplex(np.asarray(a0, dtype=float)),
            },
        )
        total_iters += int(res.nit)
        fvals = res.final_simplex[1]
        converged = bool(res.success) or float(fvals.max() - fvals.min()) <= config.optimizer.tol
        if best_angles is None:
            take = True
        else:
            tie_tol = max(tie_tol_base, 1e-12 * max(1.0, abs(best_val)))
            take = res.fun < best_val - tie_tol or (
                res.fun <= best_val + tie_tol and tuple(res.x) < tuple(best_angles)
            )
        if take:
            best_angles, best_val, best_converged = res.x, float(res.fun), converged

    direction = normalize_direction(direction_from_angles(best_angles))
    value = obj.value(direction.components)
    return DirectionFit(direction, value, total_iters, best_converged, obj.last_skipped)


def fit_coefficient_curves(
    dataset: Dataset,
    config: FitConfig,
    warm_sweep: bool = True,
) -> tuple[CoefficientCurves, list[DirectionFit]]:
    """Fit the direction at every grid point of [0, 1].

    The default sweep walks the grid in ascending order warm-starting
    each point from its left neighbor (the first point is a cold
    multi-restart); ``warm_sweep=False`` gives independent cold starts,
    whose grid points could be evaluated concurrently.
    """
    bw = _resolve_bandwidths(dataset, config)
    grid = config.t_grid
    fits: list[DirectionFit] = []
    warm: Optional[UnitDirection] = None
    for t0 in grid:
        try:
            fit = fit_direction_at(
                dataset, float(t0), config, warm_start=warm, _bandwidths=bw
            )
        except SivcError as exc:
            raise EstimationError(f"direction fit failed at t0={t0:g}: {exc}") from exc
        fits.append(fit)
        if warm_sweep:
            warm = fit.direction
    curves = CoefficientCurves(grid=grid, directions=tuple(f.direction for f in fits))
    return curves, fits


def compute_index(dataset: Dataset, curves: CoefficientCurves) -> np.ndarray:
    """Fitted index u_i = x_i . beta-hat(t_i) for every row."""
    return np.array(
        [
            float(dataset.x[i] @ evaluate_curves(curves, float(dataset.t[i])))
            for i in range(dataset.n)
        ]
    )


def fit_link(
    index: np.ndarray,
    synthetic: np.ndarray,
    config: FitConfig,
    _bandwidths: Optional[Bandwidths] = None,
) -> LinkEstimate:
    """Nadaraya-Watson estimate of the link from (index, synthetic) pairs.

    Grid points with no local data carry a marker instead of a number so
    the harness can see them.
    """
    index = np.asarray(index, dtype=float)
    synthetic = np.asarray(synthetic, dtype=float)
    if index.shape != synthetic.shape or index.ndim != 1:
        raise ValueError("index and synthetic must be equal-length vectors")
    if _bandwidths is not None:
        h = _bandwidths.h_link
    elif isinstance(config.bandwidths, Bandwidths):
        h = config.bandwidths.h_link
    else:
        h = rule_of_thumb_bandwidth(index)
    u_grid = config.u_grid
    m_hat = np.full(u_grid.size, np.nan)
    defined = np.zeros(u_grid.size, dtype=bool)
    for k, u0 in enumerate(u_grid):
        try:
            m_hat[k] = nw_estimate(index, synthetic, float(u0), h, config.kernel)
            defined[k] = True
        except NoLocalDataError:
            pass
    return LinkEstimate(u_grid=u_grid, m_hat=m_hat, defined=defined)


def fit_model(dataset: Dataset, config: FitConfig) -> ModelFit:
    """Run both stages and assemble the full estimate.

    Deterministic given (dataset, config): the optimizer restarts are a
    fixed spread, so no randomness enters the fit.
    """
    bw = _resolve_bandwidths(dataset, config)
    try:
        curves, fits = fit_coefficient_curves(dataset, config)
    except SivcError as exc:
        raise EstimationError(f"stage 1 (direction curves): {exc}") from exc
    try:
        survival = estimate_censoring_survival(dataset)
        tstar = synthetic_responses(dataset, survival)
        index = compute_index(dataset, curves)
        link = fit_link(index, tstar, config, _bandwidths=bw)
    except SivcError as exc:
        raise EstimationError(f"stage 2 (synthetic link): {exc}") from exc
    diagnostics = {
        "objectives": [f.objective for f in fits],
        "iterations": [f.iterations for f in fits],
        "converged": [f.converged for f in fits],
        "skipped_rows": [f.skipped_rows for f in fits],
        "non_converged_points": sum(1 for f in fits if not f.converged),
        "link_undefined_points": int(np.count_nonzero(~link.defined)),
    }
    return ModelFit(
        curves=curves,
        link=link,
        synthetic=tstar,
        bandwidths=bw,
        diagnostics=diagnostics,
        config=config,
    )
