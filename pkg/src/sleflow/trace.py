"""Two-dimensional trace via backward flow, and the collision angle.

The curve point at time t is recovered by running the reversed field
dw/ds = -a / (w - U(t-s)) from s = 0 to t, starting just above the
driver value at height y0.  Every grid time integrates independently, so
the cost is quadratic in resolution; fine for desk-scale checks.

The deterministic driver k sqrt(1 - t) collides with the real axis at
time 1, and the angle it makes there has a closed form in k.  The
estimator here extrapolates the landing abscissa dyadically, then fits
the approach angle over a window of times near 1.  Near the landing the
distance to the endpoint scales like (1 - t)^p with p = (pi - theta) /
(2 pi); that exponent is measured from chord ratios, not assumed.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import IO, Callable, Tuple, Union

import numpy as np

from .algebra import DomainError
from .driving import (
    BrownianDriver,
    ConstantDriver,
    Driver,
    SqrtSingularDriver,
    TabulatedDriver,
    sample_path,
)

__all__ = [
    "AngleEstimate",
    "TraceCurve",
    "TraceError",
    "backward_trace",
    "collision_angle",
    "collision_angle_formula",
    "distance_to_trace",
    "write_trace_csv",
]

_STEP_FLOOR = 1e-12  # hard floor on the backward step
_DIST_FLOOR = 1e-9  # blow-up guard on |w - U|
_FMT = "%.16e"

FileLike = Union[str, os.PathLike, IO[str]]


class TraceError(RuntimeError):
    """Raised when the backward integration cannot produce a usable curve."""


@dataclass(frozen=True)
class TraceCurve:
    """Sampled trace points with the lift-off height that produced them.

    ``aborted`` marks times whose backward integration tripped the
    blow-up guard; their points hold the last state before the abort.
    """

    a: float
    times: np.ndarray
    points: np.ndarray
    y0: float
    aborted: np.ndarray

    def __len__(self) -> int:
        return int(self.times.shape[0])


@dataclass(frozen=True)
class AngleEstimate:
    k: float
    theta_hat: float
    theta_formula: float
    fitWindow: Tuple[float, float]
    residual: float


def collision_angle_formula(k: float) -> float:
    """Closed-form collision angle for the driver k sqrt(1 - t), k > 4."""
    if k <= 4.0:
        raise DomainError(f"no collision regime for k <= 4, got {k}")
    r = math.sqrt(1.0 - 16.0 / (k * k))
    return math.pi * (1.0 - r) / (1.0 + r)


def _pointwise(driver: Driver, horizon: float, bm_cells: int) -> Callable[[float], float]:
    # scalar evaluation closures; the hot loop calls these ~1e3 times per t
    if isinstance(driver, ConstantDriver):
        value = float(driver.value)
        return lambda t: value
    if isinstance(driver, SqrtSingularDriver):
        k = float(driver.k)
        return lambda t: k * math.sqrt(max(1.0 - t, 0.0))
    if isinstance(driver, TabulatedDriver):
        times, values = driver.times, driver.values
        return lambda t: float(np.interp(t, times, values))
    if isinstance(driver, BrownianDriver):
        grid = np.linspace(0.0, float(driver.horizon), bm_cells + 1)
        values = sample_path(driver, grid).values()
        return lambda t: float(np.interp(t, grid, values))
    raise DomainError(f"unsupported driver type {type(driver).__name__}")


def _integrate_one(u_of, a, t, y0, step_scale):
    w = complex(u_of(t), y0)
    s = 0.0
    while s < t:
        gap = abs(w - u_of(t - s))
        if gap < _DIST_FLOOR:
            return w, True
        ds = min(max(step_scale * gap * gap / a, _STEP_FLOOR), t - s)
        k1 = -a / (w - u_of(t - s))
        half = s + 0.5 * ds
        k2 = -a / (w + 0.5 * ds * k1 - u_of(t - half))
        k3 = -a / (w + 0.5 * ds * k2 - u_of(t - half))
        k4 = -a / (w + ds * k3 - u_of(t - (s + ds)))
        w = w + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        s += ds
    return w, False


def backward_trace(
    driver: Driver,
    a: float,
    tGrid,
    y0: float,
    *,
    step_scale: float = 0.02,
    bm_cells: int = 4096,
) -> TraceCurve:
    """Approximate the trace at each grid time by backward integration.

    Starts at U(t) + i y0 and runs the reversed field down to time 0 with
    an adaptive fourth-order step proportional to |w - U|^2, so the cost
    per point is logarithmic in y0.  The result is within O(y0) of the
    true trace for regular drivers.  Brownian drivers are tabulated
    internally on ``bm_cells`` cells first (desk-scale only: total cost
    is quadratic in resolution).  A point whose integration stalls at
    the blow-up guard is flagged in ``aborted``.
    """
    if y0 <= 0.0:
        raise DomainError(f"y0 must be positive, got {y0}")
    if a <= 0.0:
        raise DomainError(f"a must be positive, got {a}")
    if step_scale <= 0.0:
        raise DomainError(f"step_scale must be positive, got {step_scale}")
    times = np.asarray(tGrid, dtype=float)
    if times.ndim != 1 or times.size == 0 or not np.all(np.isfinite(times)):
        raise DomainError("tGrid must be a non-empty 1-d array of finite times")
    if times[0] < 0.0 or np.any(np.diff(times) <= 0.0):
        raise DomainError("tGrid must be non-negative and strictly increasing")
    horizon = float(driver.horizon)
    if times[-1] > horizon * (1.0 + 1e-12):
        raise DomainError(f"tGrid end {times[-1]} exceeds driver horizon {horizon}")
    u_of = _pointwise(driver, horizon, bm_cells)
    points = np.empty(times.size, dtype=complex)
    aborted = np.zeros(times.size, dtype=bool)
    for i, t in enumerate(times):
        points[i], aborted[i] = _integrate_one(u_of, float(a), float(t), float(y0), step_scale)
    return TraceCurve(a=float(a), times=times, points=points, y0=float(y0), aborted=aborted)


def _landing_abscissa(points: np.ndarray) -> Tuple[float, float]:
    """Extrapolate the dyadic sequence to its limit; also return the
    measured chord-decay exponent per level."""
    chords = np.diff(points)
    mags = np.abs(chords)
    if np.any(mags == 0.0):
        raise TraceError("dyadic trace points degenerate; cannot extrapolate")
    p_levels = np.log2(mags[:-1] / mags[1:])
    p_hat = float(np.median(p_levels[-6:]))
    if not 0.05 < p_hat < 1.5:
        raise TraceError(f"chord decay exponent {p_hat} out of trust range")
    rho = 2.0 ** (-p_hat)
    # geometric tail with the measured ratio, then one Aitken pass
    tail = points[1:] + chords * rho / (1.0 - rho)
    d1 = np.diff(tail)
    d2 = d1[1:] - d1[:-1]
    safe = np.abs(d2) > 0.0
    accel = tail[2:][safe] - d1[1:][safe] ** 2 / d2[safe]
    landing = accel[-1] if accel.size else tail[-1]
    return float(landing.real), p_hat


def collision_angle(
    k: float,
    y0: float = 1e-6,
    fitWindow: Tuple[float, float] = (0.99, 0.9999),
    *,
    a: float = 2.0,
    levels: Tuple[int, int] = (6, 20),
    n_fit: int = 20,
) -> AngleEstimate:
    """Estimate the collision angle of the driver k sqrt(1 - t).

    Works in the 2-normalization of the flow (a = 2 is required; any
    other value is rejected rather than silently rescaled).  The landing
    abscissa gamma(1) is extrapolated along t = 1 - 2^-j, then
    arg(gamma(t) - gamma(1)) is fitted linearly in (1 - t)^p over the
    fit window, with p measured from the dyadic chords.  The returned
    residual is the RMS of that fit.
    """
    if a != 2.0:
        raise DomainError(f"collision_angle is defined in the a=2 normalization, got a={a}")
    formula = collision_angle_formula(k)  # validates k > 4
    lo, hi = float(fitWindow[0]), float(fitWindow[1])
    if not 0.0 < lo < hi < 1.0:
        raise DomainError(f"fitWindow must satisfy 0 < lo < hi < 1, got {fitWindow}")
    j0, j1 = levels
    if j1 - j0 < 8:
        raise DomainError(f"need at least 8 dyadic levels, got {levels}")
    driver = SqrtSingularDriver(k=k)
    dyadic_t = 1.0 - 2.0 ** (-np.arange(j0, j1 + 1, dtype=float))
    dyadic = backward_trace(driver, a, dyadic_t, y0)
    if np.any(dyadic.aborted):
        raise TraceError("backward flow aborted on a dyadic level")
    landing, p_hat = _landing_abscissa(dyadic.points)
    fit_t = 1.0 - np.geomspace(1.0 - hi, 1.0 - lo, n_fit)
    window = backward_trace(driver, a, np.sort(fit_t), y0)
    if np.any(window.aborted):
        raise TraceError("backward flow aborted inside the fit window")
    angles = np.unwrap(np.angle(window.points - landing))
    x_fit = (1.0 - window.times) ** p_hat
    slope, intercept = np.polyfit(x_fit, angles, 1)
    residual = float(np.sqrt(np.mean((angles - (slope * x_fit + intercept)) ** 2)))
    theta_hat = float(intercept)
    if not 0.0 < theta_hat < math.pi:
        raise TraceError(f"fitted angle {theta_hat} outside (0, pi)")
    return AngleEstimate(
        k=float(k),
        theta_hat=theta_hat,
        theta_formula=formula,
        fitWindow=(lo, hi),
        residual=residual,
    )


def distance_to_trace(x: float, curve: TraceCurve) -> float:
    """Minimum Euclidean distance from (x, 0) to the sampled polyline.

    Aborted points are excluded; distances are measured to the segments
    between consecutive valid points.
    """
    pts = curve.points[~curve.aborted]
    if pts.size == 0:
        raise DomainError("curve has no valid points")
    z = complex(float(x), 0.0)
    if pts.size == 1:
        return float(abs(z - pts[0]))
    best = float(np.min(np.abs(z - pts)))
    start = pts[:-1]
    seg = pts[1:] - start
    seg_sq = seg.real**2 + seg.imag**2
    ok = seg_sq > 0.0
    if np.any(ok):
        start, seg, seg_sq = start[ok], seg[ok], seg_sq[ok]
        rel = z - start
        frac = np.clip((rel.real * seg.real + rel.imag * seg.imag) / seg_sq, 0.0, 1.0)
        best = min(best, float(np.min(np.abs(z - (start + frac * seg)))))
    return best


def write_trace_csv(curve: TraceCurve, file: FileLike) -> None:
    """Dump the curve as CSV with columns t, re, im."""
    if isinstance(file, (str, os.PathLike)):
        with open(file, "w", newline="") as fh:
            _write_rows(curve, fh)
    else:
        _write_rows(curve, file)


def _write_rows(curve: TraceCurve, fh: IO[str]) -> None:
    writer = csv.writer(fh)
    writer.writerow(["t", "re", "im"])
    for t, pt in zip(curve.times, curve.points):
        writer.writerow([_FMT % t, _FMT % pt.real, _FMT % pt.imag])
