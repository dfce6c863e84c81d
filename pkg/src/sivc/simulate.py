"""Monte Carlo study: data generation, replication runner, quantile bands.

The "paper" preset draws two independent standard normal covariates, a
uniform [0, 1] modifier, gaussian noise, direction curve
(cos t, sin t), and quadratic link u^2; censoring times are uniform on
(0, c) with c calibrated so the expected censoring fraction hits the
target. The "constant" preset keeps the direction fixed and uses the
identity link, which gives a known-truth oracle for direction recovery.

Every replication draws from its own stream seeded by (master seed,
replication index), so results do not depend on execution order or
worker count; aggregation happens in replication order on one thread.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .censoring import calibrate_censoring
from .errors import SivcError
from .estimator import FitConfig, fit_model
from .model import Dataset, censoring_rate, normalize_direction

__all__ = [
    "SimConfig",
    "TruthRecord",
    "SimSummary",
    "generate_dataset",
    "run_monte_carlo",
    "pointwise_quantile",
    "resolve_censor_scale",
]

_PRESETS = ("paper", "constant")
_CALIBRATION_STREAM = 0x5EEDCA1


@dataclass(frozen=True)
class SimConfig:
    """Data-generating process and replication settings."""

    n: int = 500
    d: int = 2
    reps: int = 100
    censor_target: float = 0.3
    noise_sd: float = 0.2
    seed: int = 0
    preset: str = "paper"
    constant_direction: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0.0 <= self.censor_target < 1.0:
            raise ValueError("censor_target must lie in [0, 1)")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be positive")
        if self.preset not in _PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; expected one of {_PRESETS}")
        if self.preset == "paper":
            if self.d != 2:
                raise ValueError('the "paper" preset requires d = 2')
        else:
            if self.constant_direction is None:
                raise ValueError('the "constant" preset requires constant_direction')
            direction = tuple(float(v) for v in self.constant_direction)
            if len(direction) != self.d:
                raise ValueError("constant_direction length must equal d")
            normalize_direction(np.asarray(direction))
            object.__setattr__(self, "constant_direction", direction)

    def true_directions(self, ts: np.ndarray) -> np.ndarray:
        """True direction at each modifier value, one row per value."""
        ts = np.asarray(ts, dtype=float)
        if self.preset == "paper":
            return np.column_stack((np.cos(ts), np.sin(ts)))
        unit = normalize_direction(np.asarray(self.constant_direction)).components
        return np.tile(unit, (ts.size, 1))

    def true_link(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u * u if self.preset == "paper" else u.copy()

    def draw_latent(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Latent (uncensored) responses from the preset; used to
        calibrate the censoring scale."""
        x = rng.standard_normal((size, self.d))
        ts = rng.uniform(0.0, 1.0, size)
        eps = rng.normal(0.0, self.noise_sd, size)
        index = np.einsum("ij,ij->i", x, self.true_directions(ts))
        return self.true_link(index) + eps


@dataclass(frozen=True)
class TruthRecord:
    """Hidden simulation truth for one replication."""

    y_star: np.ndarray
    censor_times: Optional[np.ndarray]
    index: np.ndarray
    censor_scale: Optional[float]


@dataclass(frozen=True)
class SimSummary:
    """Pointwise quantile bands over replications, plus run bookkeeping.

    ``beta_reps`` has shape (reps, grid, d) and ``m_reps`` shape
    (reps, link grid); failed replications hold NaN rows and are listed
    in ``failures``. Band arrays hold NaN where no replication produced
    a defined value.
    """

    t_grid: np.ndarray
    u_grid: np.ndarray
    beta_median: np.ndarray
    beta_q05: np.ndarray
    beta_q95: np.ndarray
    m_median: np.ndarray
    m_q05: np.ndarray
    m_q95: np.ndarray
    m_defined_counts: np.ndarray
    censoring_rates: np.ndarray
    failures: tuple[tuple[int, str], ...]
    failure_log: tuple[str, ...]
    degraded: bool
    beta_reps: np.ndarray = field(repr=False)
    m_reps: np.ndarray = field(repr=False)

    def __post_init__(self):
        ok = np.isfinite(self.beta_median) & np.isfinite(self.beta_q05) & np.isfinite(self.beta_q95)
        if not np.all(
            (self.beta_q05[ok] <= self.beta_median[ok])
            & (self.beta_median[ok] <= self.beta_q95[ok])
        ):
            raise ValueError("quantile bands must be ordered q05 <= median <= q95")
        ok_m = self.m_defined_counts > 0
        if not np.all(
            (self.m_q05[ok_m] <= self.m_median[ok_m])
            & (self.m_median[ok_m] <= self.m_q95[ok_m])
        ):
            raise ValueError("link bands must be ordered q05 <= median <= q95")


@lru_cache(maxsize=32)
def resolve_censor_scale(config: SimConfig) -> Optional[float]:
    """Calibrated upper bound of the uniform censoring law (None when
    the target rate is zero). Cached: calibration is deterministic in
    (config.seed, probe size)."""
    if config.censor_target == 0.0:
        return None
    return calibrate_censoring(
        config.censor_target,
        config,
        probe_n=100_000,
        seed=(config.seed, _CALIBRATION_STREAM),
    )


def generate_dataset(
    config: SimConfig,
    rep_index: int,
    censor_scale: Optional[float] = None,
) -> tuple[Dataset, TruthRecord]:
    """One replication's data, deterministic given (seed, rep_index).

    Draw order within the stream: covariates, modifiers, noise,
    censoring times.
    """
    if rep_index < 0:
        raise ValueError("rep_index must be nonnegative")
    if censor_scale is None:
        censor_scale = resolve_censor_scale(config)
    rng = np.random.default_rng((config.seed, rep_index))
    x = rng.standard_normal((config.n, config.d))
    ts = rng.uniform(0.0, 1.0, config.n)
    eps = rng.normal(0.0, config.noise_sd, config.n)
    index = np.einsum("ij,ij->i", x, config.true_directions(ts))
    y_star = config.true_link(index) + eps
    if config.censor_target == 0.0:
        dataset = Dataset(
            y=y_star, delta=np.ones(config.n, dtype=int), x=x, t=ts
        )
        return dataset, TruthRecord(y_star, None, index, None)
    censor_times = rng.uniform(0.0, censor_scale, config.n)
    y = np.minimum(y_star, censor_times)
    delta = (y_star < censor_times).astype(int)
    dataset = Dataset(y=y, delta=delta, x=x, t=ts)
    return dataset, TruthRecord(y_star, censor_times, index, censor_scale)


def pointwise_quantile(values: np.ndarray, p: float) -> float:
    """Nearest-rank quantile: the ceil(p*n)-th smallest value (minimum
    at p = 0)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("quantile of empty values")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    ordered = np.sort(values)
    rank = max(1, math.ceil(p * values.size))
    return float(ordered[rank - 1])


def _run_replication(args) -> tuple[int, dict]:
    config, fit_config, rep, censor_scale = args
    dataset, _ = generate_dataset(config, rep, censor_scale)
    fit = fit_model(dataset, fit_config)
    return rep, {
        "beta": fit.curves.matrix,
        "m_hat": fit.link.m_hat,
        "m_defined": fit.link.defined,
        "censoring_rate": censoring_rate(dataset),
        "non_converged_points": fit.diagnostics["non_converged_points"],
        "link_undefined_points": fit.diagnostics["link_undefined_points"],
    }


def run_monte_carlo(
    sim: SimConfig,
    fit: FitConfig,
    workers: Optional[int] = None,
) -> SimSummary:
    """Generate-and-fit over all replications and aggregate the bands.

    Replications run independently (optionally in a process pool);
    results are keyed by replication index so worker count never changes
    the outcome. A replication whose fit fails entirely is logged and
    excluded; more than 20% whole-replication failures flips the
    ``degraded`` flag. Grid points left undefined by some replications
    are excluded pointwise, with the defined count reported.
    """
    censor_scale = resolve_censor_scale(sim)
    t_grid = fit.t_grid
    u_grid = fit.u_grid
    reps = sim.reps
    if workers is None:
        workers = max(1, min(4, os.cpu_count() or 1))
    tasks = [(sim, fit, rep, censor_scale) for rep in range(reps)]
    results: list[Optional[dict]] = [None] * reps
    failures: list[tuple[int, str]] = []
    failure_log: list[str] = []
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = pool.map(_try_replication, tasks)
            for rep, payload, error in outcomes:
                if error is not None:
                    failures.append((rep, error))
                else:
                    results[rep] = payload
    else:
        for task in tasks:
            rep, payload, error = _try_replication(task)
            if error is not None:
                failures.append((rep, error))
            else:
                results[rep] = payload

    beta_reps = np.full((reps, t_grid.size, sim.d), np.nan)
    m_reps = np.full((reps, u_grid.size), np.nan)
    rates = []
    for rep, payload in enumerate(results):
        if payload is None:
            continue
        beta_reps[rep] = payload["beta"]
        m = payload["m_hat"].copy()
        m[~payload["m_defined"]] = np.nan
        m_reps[rep] = m
        rates.append(payload["censoring_rate"])
        if payload["non_converged_points"]:
            failure_log.append(
                f"rep {rep}: {payload['non_converged_points']} non-converged grid points"
            )
        if payload["link_undefined_points"]:
            failure_log.append(
                f"rep {rep}: {payload['link_undefined_points']} link grid points without local data"
            )
    for rep, error in sorted(failures):
        failure_log.append(f"rep {rep}: failed ({error})")

    beta_median, beta_q05, beta_q95 = _band(beta_reps)
    m_median, m_q05, m_q95 = _band(m_reps)
    m_defined_counts = np.count_nonzero(np.isfinite(m_reps), axis=0)
    return SimSummary(
        t_grid=t_grid,
        u_grid=u_grid,
        beta_median=beta_median,
        beta_q05=beta_q05,
        beta_q95=beta_q95,
        m_median=m_median,
        m_q05=m_q05,
        m_q95=m_q95,
        m_defined_counts=m_defined_counts,
        censoring_rates=np.asarray(rates),
        failures=tuple(sorted(failures)),
        failure_log=tuple(failure_log),
        degraded=len(failures) > 0.2 * reps,
        beta_reps=beta_reps,
        m_reps=m_reps,
    )


def _try_replication(task) -> tuple[int, Optional[dict], Optional[str]]:
    rep = task[2]
    try:
        _, payload = _run_replication(task)
        return rep, payload, None
    except SivcError as exc:
        return rep, None, str(exc)


def _band(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pointwise nearest-rank bands over axis 0, skipping NaN entries."""
    _, *shape = values.shape
    median = np.full(shape, np.nan)
    q05 = np.full(shape, np.nan)
    q95 = np.full(shape, np.nan)
    for idx in np.ndindex(*shape):
        col = values[(slice(None), *idx)]
        col = col[np.isfinite(col)]
        if col.size == 0:
            continue
        median[idx] = pointwise_quantile(col, 0.5)
        q05[idx] = pointwise_quantile(col, 0.05)
        q95[idx] = pointwise_quantile(col, 0.95)
    return median, q05, q95
