"""Driving functions for the Loewner flow, sampled on refinable grids.

A driver is either a Brownian motion (standard, up to an optional scale used
by the deterministic-normalization bridge in the trace module), one of two
closed-form deterministic motions, or a tabulated record.  Stochastic drivers
are realized as increments over grid cells; each cell is addressed by
(base cell, dyadic level, index) and its value is a pure function of
(seed, address), so refining a cell at its midpoint never changes what any
coarser observer has already seen: the two halves always sum exactly to the
parent increment.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .algebra import DomainError
from .rng import DOMAIN_BRIDGE, DOMAIN_DRIVER, key4, normal_from_key, normals_for_cells

# address packing: hi = base * 64 + level; level is capped well below 64
MAX_LEVEL = 58


@dataclass(frozen=True)
class BrownianDriver:
    seed: int
    scale: float = 1.0
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if self.scale <= 0.0:
            raise DomainError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class SqrtSingularDriver:
    """U(t) = k sqrt(1 - t) on [0, 1]; needs k > 4 for a swallowing collision."""

    k: float
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if self.k <= 4.0:
            raise DomainError(f"k must exceed 4, got {self.k}")
        if not (0.0 < self.horizon <= 1.0):
            raise DomainError(f"horizon must lie in (0, 1], got {self.horizon}")


@dataclass(frozen=True)
class ConstantDriver:
    value: float = 0.0
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")


@dataclass(frozen=True)
class TabulatedDriver:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape or t.size < 2:
            raise DomainError("tabulated driver needs matching 1-d times and values")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0.0):
            raise DomainError("tabulated times must start at 0 and strictly increase")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])


Driver = BrownianDriver | SqrtSingularDriver | ConstantDriver | TabulatedDriver


def evaluate(driver: Driver, t) -> np.ndarray:
    """Closed-form driver value; rejects Brownian drivers."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > driver.horizon + 1e-12):
        raise DomainError("time outside driver horizon")
    if isinstance(driver, ConstantDriver):
        return np.full_like(t, driver.value)
    if isinstance(driver, SqrtSingularDriver):
        return driver.k * np.sqrt(np.clip(1.0 - t, 0.0, None))
    if isinstance(driver, TabulatedDriver):
        return np.interp(t, driver.times, driver.values)
    raise DomainError("Brownian drivers have no pointwise values; sample a path")


@dataclass(frozen=True)
class NoisePath:
    """Driver increments over a grid, with refinement bookkeeping.

    grid has n+1 edges; increments, base, level, index describe the n cells.
    generation counts refinements applied since sampling.
    """

    driver: Driver
    grid: np.ndarray
    increments: np.ndarray
    base: np.ndarray
    level: np.ndarray
    index: np.ndarray
    generation: int = 0

    @property
    def ncells(self) -> int:
        return self.increments.size

    def values(self) -> np.ndarray:
        """Driver values at the grid edges (starts from U(0))."""
        u0 = 0.0
        if not isinstance(self.driver, BrownianDriver):
            u0 = float(evaluate(self.driver, 0.0))
        return u0 + np.concatenate(([0.0], np.cumsum(self.increments)))


def _check_grid(grid: np.ndarray, horizon: float) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise DomainError("grid must be 1-d with at least two edges")
    if grid[0] != 0.0:
        raise DomainError("grid must start at 0")
    if np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid must be strictly increasing")
    if grid[-1] > horizon * (1.0 + 1e-12):
        raise DomainError(f"grid end {grid[-1]} exceeds driver horizon {horizon}")
    return grid


def sample_path(driver: Driver, grid) -> NoisePath:
    """Realize driver increments over the cells of a grid.

    For a Brownian driver the result is a deterministic function of
    (seed, grid); refinement later exposes finer structure of the same path.
    """
    grid = _check_grid(grid, driver.horizon)
    n = grid.size - 1
    base = np.arange(n, dtype=np.uint64)
    level = np.zeros(n, dtype=np.uint64)
    index = np.zeros(n, dtype=np.uint64)
    if isinstance(driver, BrownianDriver):
        widths = np.diff(grid)
        xi = normals_for_cells(driver.seed, DOMAIN_DRIVER, base * np.uint64(64), index)
        incr = driver.scale * np.sqrt(widths) * xi
    else:
        incr = np.diff(evaluate(driver, grid))
    return NoisePath(driver=driver, grid=grid, increments=incr,
                     base=base, level=level, index=index)


def refine(path: NoisePath, cell: int) -> NoisePath:
    """Split one cell at its midpoint; coarse sums are preserved exactly."""
    n = path.ncells
    if not (0 <= cell < n):
        raise DomainError(f"cell {cell} out of range 0..{n - 1}")
    lev = int(path.level[cell])
    if lev >= MAX_LEVEL:
        raise DomainError(f"cell already at maximum refinement level {MAX_LEVEL}")
    t0, t1 = path.grid[cell], path.grid[cell + 1]
    mid = 0.5 * (t0 + t1)
    parent = float(path.increments[cell])
    if isinstance(path.driver, BrownianDriver):
        hi = np.uint64(int(path.base[cell]) * 64 + lev)
        key = key4(np.uint64(path.driver.seed), np.uint64(DOMAIN_BRIDGE), hi,
                   np.uint64(int(path.index[cell])))
        xi = float(normal_from_key(np.uint64(key)))
        left = 0.5 * parent + path.driver.scale * 0.5 * sqrt(t1 - t0) * xi
    else:
        left = float(evaluate(path.driver, mid)) - float(evaluate(path.driver, t0))
    right = parent - left

    grid = np.insert(path.grid, cell + 1, mid)
    incr = np.concatenate([path.increments[:cell], [left, right], path.increments[cell + 1:]])
    base = np.concatenate([path.base[:cell], [path.base[cell]] * 2, path.base[cell + 1:]]).astype(np.uint64)
    level = np.concatenate([path.level[:cell], [lev + 1] * 2, path.level[cell + 1:]]).astype(np.uint64)
    idx = int(path.index[cell])
    index = np.concatenate([path.index[:cell], [2 * idx, 2 * idx + 1], path.index[cell + 1:]]).astype(np.uint64)
    return NoisePath(driver=path.driver, grid=grid, increments=incr,
                     base=base, level=level, index=index, generation=path.generation + 1)


def tabulated_from_csv(file) -> TabulatedDriver:
    """Read a two-column (time, value) CSV; the header row is mandatory."""
    with open(file, "r", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DomainError("empty driver file")
    header = rows[0]
    if len(header) != 2:
        raise DomainError(f"expected two columns, got {len(header)}")
    try:
        float(header[0])
    except ValueError:
        pass
    else:
        raise DomainError("driver file must have a header row")
    times, values = [], []
    for ln, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DomainError(f"line {ln}: expected two columns")
        try:
            times.append(float(row[0]))
            values.append(float(row[1]))
        except ValueError as exc:
            raise DomainError(f"line {ln}: {exc}") from exc
    return TabulatedDriver(times=np.array(times), values=np.array(values))
