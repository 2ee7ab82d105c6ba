"""Monte Carlo estimators for the boundary derivative exponents.

Four measurements built on the walker kernels: the direct moment curve
(the derivative weight read off where the conformal radius first crosses
an absolute threshold e^{-s}), interval covering counts on [1, 2], the
two-point product with its separation scaling, and the harmonic-measure
exponent under tilted sampling.  A shared weighted-least-squares log fit
turns any curve into an exponent with a confidence band.

Estimates are seed-ordered means over counter-based child seeds, so a
result depends only on the master seed and the sample count, never on
batching or execution order.  The direct and weighted estimators target
the same quantity at x = 1 once clocks are matched (an absolute
threshold at depth s sits at radius-clock level s / a), which is what
the cross-checks in the tests lean on.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import IO, Union

import numpy as np

from . import kernels
from .algebra import SpectrumParams, params_from_lambda, params_from_nu
from .kernels import (
    MODE_BROWNIAN,
    POL_UCLOCK,
    REC_FLAG,
    REC_H,
    REC_LOGHP,
    REC_O,
    REC_U,
    ST_TCAP,
    SV_LOGHP,
    SV_STATUS,
)
from .rng import seed_for
from .weighted import weighted_moment

__all__ = [
    "CoverReport",
    "ExponentFit",
    "HarmonicReport",
    "MomentCurve",
    "TwoPointReport",
    "covering_counts",
    "direct_moment",
    "fit_exponent",
    "fit_record",
    "harmonic_exponent",
    "two_point_scaling",
    "weighted_curve",
    "write_cover_csv",
    "write_curve_csv",
    "write_fit_json",
]

# distinct stream words so estimator child seeds never collide with the
# weighted-path stream (17) or the martingale-check stream (101)
_STREAM_DIRECT = 23
_STREAM_COVER = 29
_STREAM_PAIR = 31
_STREAM_HARMONIC = 37

_DU = 1e-3
_FRAC = 0.1
_W0 = 0.25
_EPS_REL = 1e-9
_GAP_TOL = 1e-6
_T_CAP = 1e7  # joint-evolution horizon; unresolved points are reported
_ENV_SPACING = 0.5  # envelope lattice step, same grid the calibration used
_FMT = "%.16e"

FileLike = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class MomentCurve:
    """Derivative-moment estimates along a grid of threshold depths.

    sValues holds the absolute depths s (the threshold is e^{-s}),
    estimates and stderrs the per-depth mean and its standard error.
    method is "direct" (path weights at threshold crossings) or
    "weighted" (change-of-measure identity); x is the starting point.
    """

    sValues: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    method: str
    params: SpectrumParams
    x: float

    def __post_init__(self) -> None:
        if self.method not in ("direct", "weighted"):
            raise ValueError(f"unknown method: {self.method!r}")
        n = len(self.sValues)
        if len(self.estimates) != n or len(self.stderrs) != n:
            raise ValueError("curve arrays must have equal length")

    def __len__(self) -> int:
        return int(len(self.sValues))


@dataclass(frozen=True)
class ExponentFit:
    """Log-linear fit of a curve: slope, intercept, 95% band, window, r2."""

    slope: float
    intercept: float
    ci95: tuple
    window: tuple
    r2: float


@dataclass(frozen=True)
class CoverReport:
    """Covering counts per depth n with their errors.

    counts[i] is the mean number of intervals at depth nValues[i] whose
    midpoint still carries derivative mass e^{-beta (n - 2)} when its
    radius first reaches e^{-(n - 2)}.  unresolved[i] is the mean number
    of midpoints whose status was still open at the simulation horizon;
    anything above zero flags a horizon that is too short.
    """

    beta: float
    nValues: tuple
    counts: tuple
    stderrs: tuple
    unresolved: tuple = ()


@dataclass(frozen=True)
class TwoPointReport:
    """Joint survival-weight estimates across a grid of separations.

    Every requested separation is reported with its event count; the
    embedded fit uses only separations inside the scaling window
    (e^{-n}, 1), flagged in usedInFit.  factorGap is the sample
    covariance of the two weights at the widest separation, whose
    distance from zero measures the failure of factorization there.
    """

    a: float
    lam: float
    n: int
    proxy: tuple
    separations: np.ndarray
    estimates: np.ndarray
    stderrs: np.ndarray
    nEvents: np.ndarray
    usedInFit: np.ndarray
    fit: ExponentFit
    slopeTarget: float
    factorGap: float
    factorSE: float

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def slopeSE(self) -> float:
        return (self.fit.ci95[1] - self.fit.slope) / 1.959963984540054

    @property
    def withinBound(self) -> bool:
        """One-sided check against the target exponent plus 0.2 slack."""
        return bool(self.fit.slope <= self.slopeTarget + 0.2)


@dataclass(frozen=True)
class HarmonicReport:
    """Harmonic-measure decay under tilted sampling and the fitted rate.

    alphaHat is the fitted decay rate of the measure proxy; alphaGap is
    its distance from the derivative-exponent prediction 1 + beta.
    """

    curve: MomentCurve
    alphaHat: float
    alphaGap: float
    fit: ExponentFit


def _grid(name: str, values, *, minimum: float = 0.0) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d grid")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < minimum):
        raise ValueError(f"{name} must be >= {minimum:g}")
    if np.any(np.diff(arr) <= 0.0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr


def _child_seeds(master: int, stream: int, n: int) -> np.ndarray:
    return np.array(
        [seed_for(master, stream, i) for i in range(n)], dtype=np.uint64
    )


def _linfit(x: np.ndarray, y: np.ndarray, sig) -> tuple:
    """WLS line fit; sig = None means unit weights with residual errors.

    Returns (slope, intercept, se_slope, r2).  With sig given the slope
    error treats the variances as known; without it the error comes from
    the residuals (infinite when there are no spare degrees of freedom).
    """
    w = np.ones_like(y) if sig is None else 1.0 / np.asarray(sig) ** 2
    sw = float(np.sum(w))
    xbar = float(np.sum(w * x) / sw)
    ybar = float(np.sum(w * y) / sw)
    dx = x - xbar
    sxx = float(np.sum(w * dx * dx))
    if sxx <= 0.0:
        raise ValueError("fit abscissae are degenerate")
    slope = float(np.sum(w * dx * (y - ybar)) / sxx)
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(w * resid**2))
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    r2 = 1.0 if ss_tot <= 0.0 else 1.0 - ss_res / ss_tot
    if sig is None:
        k = x.size
        se = math.sqrt(ss_res / ((k - 2) * sxx)) if k > 2 else math.inf
    else:
        se = math.sqrt(1.0 / sxx)
    return slope, intercept, se, r2


def direct_moment(a: float, lam: float, x: float, sGrid, N: int,
                  seed: int = 0, *, du: float = _DU) -> MomentCurve:
    """Estimate the derivative moment at absolute thresholds e^{-s}.

    Each path runs its own driver from x; when its radius first crosses
    e^{-s} it contributes the derivative weight there, and paths
    swallowed above a threshold contribute zero to it.  At s = 0, x = 1
    every path starts on the level set and the estimate is exactly 1.
    """
    params = params_from_lambda(a, lam)
    x = float(x)
    if x < 1.0:
        raise ValueError(f"x must be at least 1, got {x:g}")
    s_arr = _grid("sGrid", sGrid)
    n = int(N)
    if n < 2:
        raise ValueError(f"need at least 2 paths, got {n}")
    levels = (s_arr + math.log(x)) / a
    seeds = _child_seeds(seed, _STREAM_DIRECT, n)
    recs = np.zeros((n, levels.size, 8))
    t_recs = np.zeros((n, 0, 8))
    states = np.zeros((n, 10))
    kernels.walk_batch(
        seeds, np.full(n, x), a, 0.0, du, _FRAC, _W0, np.inf, np.inf,
        levels, np.empty(0), _EPS_REL, _GAP_TOL, -np.inf,
        recs, t_recs, states,
    )
    flagged = recs[:, :, REC_FLAG] > 0.5
    vals = np.where(flagged, np.exp(lam * recs[:, :, REC_LOGHP]), 0.0)
    estimates = vals.mean(axis=0)
    stderrs = vals.std(axis=0, ddof=1) / math.sqrt(n)
    return MomentCurve(
        sValues=s_arr, estimates=estimates, stderrs=stderrs,
        method="direct", params=params, x=x,
    )


def weighted_curve(a: float, lam: float, sGrid, N: int, seed: int = 0, *,
                   step: float = 1e-3) -> MomentCurve:
    """Weighted-measure curve on the same absolute depth grid, at x = 1.

    From x = 1 the absolute threshold e^{-s} sits at radius-clock time
    s / a, where the change-of-measure estimator applies exactly, so
    this curve is directly comparable with direct_moment(x=1) point by
    point.  The same master seed is reused across depths; estimates
    share paths and are strongly positively correlated along the grid.
    """
    params = params_from_lambda(a, lam)
    s_arr = _grid("sGrid", sGrid)
    est = np.empty(s_arr.size)
    se = np.empty(s_arr.size)
    for j, s in enumerate(s_arr):
        est[j], se[j] = weighted_moment(a, lam, 1.0, s / a, N, seed,
                                        step=step)
    return MomentCurve(
        sValues=s_arr, estimates=est, stderrs=se,
        method="weighted", params=params, x=1.0,
    )


def fit_exponent(curve, window=None) -> ExponentFit:
    """Fit log(estimate) against the grid over a window by WLS.

    Accepts a MomentCurve (grid sValues) or a CoverReport (grid
    nValues).  The default window drops the smallest grid point, where
    the start-up transient sits.  Log-scale errors come from the
    delta method; when any selected standard error is non-positive the
    fit falls back to ordinary least squares with residual errors.
    Needs at least 4 positive estimates inside the window.
    """
    if isinstance(curve, CoverReport):
        grid = np.asarray(curve.nValues, dtype=float)
        est = np.asarray(curve.counts, dtype=float)
        std = np.asarray(curve.stderrs, dtype=float)
    else:
        grid = np.asarray(curve.sValues, dtype=float)
        est = np.asarray(curve.estimates, dtype=float)
        std = np.asarray(curve.stderrs, dtype=float)

    if window is None:
        lo = grid[1] if grid.size >= 5 else grid[0]
        window = (float(lo), float(grid[-1]))
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise ValueError(f"bad fit window ({lo:g}, {hi:g})")
    if lo < grid.min() - 1e-9 or hi > grid.max() + 1e-9:
        raise ValueError("fit window outside the data range")

    sel = (grid >= lo - 1e-12) & (grid <= hi + 1e-12)
    sel &= np.isfinite(est) & (est > 0.0)
    k = int(np.count_nonzero(sel))
    if k < 4:
        raise ValueError(
            f"degenerate window: {k} positive points between "
            f"{lo:g} and {hi:g}, need at least 4"
        )
    xs = grid[sel]
    ys = np.log(est[sel])
    sig = std[sel] / est[sel]
    use_wls = bool(np.all(std[sel] > 0.0))
    slope, intercept, se, r2 = _linfit(xs, ys, sig if use_wls else None)
    half = 1.959963984540054 * se
    return ExponentFit(
        slope=slope, intercept=intercept,
        ci95=(slope - half, slope + half), window=(lo, hi), r2=r2,
    )


def _cover_geometry(n_list, cap: int):
    """Midpoints and per-point thresholds for every requested depth.

    Depth n uses floor(2 e^n) - 1 intervals of length e^{-n} / 2 laid
    left to right from 1, which keeps the count strictly under 2 e^n
    while covering all of [1, 2] but a sub-interval sliver at the right
    edge.
    """
    h0_parts = []
    starts = [0]
    total = 0
    for nv in n_list:
        width = 0.5 * math.exp(-float(nv))
        m = int(math.floor(2.0 * math.exp(float(nv)))) - 1
        total += m
        if total > cap:
            raise ValueError(
                f"covering at n={nv} needs {total} intervals, over the "
                f"cap of {cap}; raise max_intervals or drop the depth"
            )
        h0_parts.append(1.0 + (np.arange(m) + 0.5) * width)
        starts.append(total)
    h0 = np.concatenate(h0_parts)
    return h0, np.asarray(starts[:-1], dtype=np.intp)


def covering_counts(a: float, beta: float, nValues, N: int, seed: int = 0, *,
                    du: float = _DU, t_cap: float = _T_CAP,
                    max_intervals: int = 200_000) -> CoverReport:
    """Count intervals on [1, 2] that stay thick at matched depth.

    At depth n the line [1, 2] is covered by intervals of length
    e^{-n} / 2; per driver sample every midpoint is evolved jointly
    through the same realization, and an interval counts when the
    midpoint's radius reaches e^{-(n-2)} with derivative weight still at
    least e^{-beta (n-2)}.  Midpoints neither swallowed nor resolved by
    the horizon that could still count are tallied as unresolved.
    """
    if not 0.25 < a < 0.5:
        raise ValueError(f"a must lie in (1/4, 1/2), got {a:g}")
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"beta must be positive, got {beta:g}")
    n_list = [int(v) for v in nValues]
    if not n_list or any(v < 3 for v in n_list):
        raise ValueError("nValues must hold integers >= 3")
    if any(b <= c for b, c in zip(n_list[1:], n_list)):
        raise ValueError("nValues must be strictly increasing")
    nsamp = int(N)
    if nsamp < 2:
        raise ValueError(f"need at least 2 samples, got {nsamp}")

    h0, starts = _cover_geometry(n_list, int(max_intervals))
    K = h0.size
    depth = np.repeat([float(v - 2) for v in n_list], np.diff(
        np.append(starts, K)))
    sig_levels = ((np.log(h0) + depth) / a)[:, None]
    thr = -beta * depth

    frames = np.zeros((0, 3 + 4 * K))
    crossings = np.zeros((K, 1, 8))
    states = np.zeros((K, 10))
    empty = np.empty(0)
    counts = np.zeros((nsamp, len(n_list)))
    open_counts = np.zeros((nsamp, len(n_list)))
    for i in range(nsamp):
        sd = np.uint64(seed_for(seed, _STREAM_COVER, i))
        kernels.evolve_joint(
            sd, MODE_BROWNIAN, POL_UCLOCK, 1.0, 0.0, empty, empty,
            0.0, h0, a, du, 1e-4, _FRAC, _W0, t_cap,
            sig_levels, empty, _EPS_REL, _GAP_TOL,
            frames, crossings, states,
        )
        flag = crossings[:, 0, REC_FLAG] > 0.5
        thick = flag & (crossings[:, 0, REC_LOGHP] >= thr - 1e-12)
        pending = (~flag) & (states[:, SV_STATUS] == ST_TCAP)
        pending &= states[:, SV_LOGHP] >= thr - 1e-12
        counts[i] = np.add.reduceat(thick.astype(float), starts)
        open_counts[i] = np.add.reduceat(pending.astype(float), starts)

    mean = counts.mean(axis=0)
    se = counts.std(axis=0, ddof=1) / math.sqrt(nsamp)
    return CoverReport(
        beta=beta, nValues=tuple(n_list),
        counts=tuple(float(v) for v in mean),
        stderrs=tuple(float(v) for v in se),
        unresolved=tuple(float(v) for v in open_counts.mean(axis=0)),
    )


def _pair_ladders(a: float, n: int, x0s: np.ndarray, u_env: float,
                  c_env: float):
    """Per-point threshold ladders and envelope bounds for the pair run.

    Each point gets its own radius-clock lattice at the envelope spacing
    plus a final level at the absolute depth n; the envelope bound is
    evaluated at every ladder entry including the final one.
    """
    ladders = []
    bounds = []
    for x0 in x0s:
        top = (n + math.log(x0)) / a
        k = int(math.floor((top - 1e-9) / _ENV_SPACING))
        lev = np.append(np.arange(1, k + 1) * _ENV_SPACING, top)
        env = u_env * np.sqrt(lev) * np.log(2.0 + lev) + c_env
        ladders.append(lev)
        bounds.append(env)
    nmax = max(lv.size for lv in ladders)
    sig_levels = np.full((x0s.size, nmax), np.inf)
    for i, lv in enumerate(ladders):
        sig_levels[i, : lv.size] = lv
    return ladders, bounds, sig_levels


def two_point_scaling(a: float, lam: float, n: int, sepGrid, N: int,
                      seed: int = 0, *, proxy=(2.0, 1.0), du: float = _DU,
                      t_cap: float = _T_CAP,
                      min_events: int = 5) -> TwoPointReport:
    """Joint derivative weights at 1 and 1 + separation, depth e^{-n}.

    One driver realization per seed serves every separation: the point
    at 1 and all shifted points evolve jointly.  A point scores when it
    reaches the absolute radius e^{-n} with its clock integral inside
    the concentration envelope (parameters from proxy) at every lattice
    time on the way down; it then contributes its derivative weight.
    The product of the two weights is averaged per separation, a log-log
    line gives the scaling slope, and the covariance gap at the widest
    separation checks factorization.  Any positive separation is
    accepted and reported, but the fit keeps only the scaling window
    (e^{-n}, 1): below it the moment saturates at its floor, above it
    the points decouple.  Separations whose event count falls under
    min_events are likewise reported but left out of the fit.
    """
    params = params_from_lambda(a, lam)
    n = int(n)
    if n < 3:
        raise ValueError(f"depth n must be at least 3, got {n}")
    seps = _grid("sepGrid", sepGrid)
    if seps[0] <= 0.0:
        raise ValueError("separations must be positive")
    u_env, c_env = float(proxy[0]), float(proxy[1])
    if u_env < 0.0 or c_env < 0.0:
        raise ValueError("proxy envelope parameters must be non-negative")
    nsamp = int(N)
    if nsamp < 2:
        raise ValueError(f"need at least 2 samples, got {nsamp}")

    x0s = np.concatenate(([1.0], 1.0 + seps))
    K = x0s.size
    ladders, bounds, sig_levels = _pair_ladders(a, n, x0s, u_env, c_env)
    beta = params.beta

    frames = np.zeros((0, 3 + 4 * K))
    crossings = np.zeros((K, sig_levels.shape[1], 8))
    states = np.zeros((K, 10))
    empty = np.empty(0)
    weights = np.zeros((nsamp, K))
    for i in range(nsamp):
        sd = np.uint64(seed_for(seed, _STREAM_PAIR, i))
        kernels.evolve_joint(
            sd, MODE_BROWNIAN, POL_UCLOCK, 1.0, 0.0, empty, empty,
            0.0, x0s, a, du, 1e-4, _FRAC, _W0, t_cap,
            sig_levels, empty, _EPS_REL, _GAP_TOL,
            frames, crossings, states,
        )
        for j in range(K):
            m = ladders[j].size
            rec = crossings[j, :m]
            if rec[m - 1, REC_FLAG] <= 0.5:
                weights[i, j] = 0.0
                continue
            drift = np.abs(rec[:, REC_U] - beta * ladders[j])
            if np.all(drift <= bounds[j] + 1e-12):
                weights[i, j] = math.exp(lam * rec[m - 1, REC_LOGHP])
            else:
                weights[i, j] = 0.0

    w_base = weights[:, 0]
    w_shift = weights[:, 1:]
    prod = w_base[:, None] * w_shift
    estimates = prod.mean(axis=0)
    stderrs = prod.std(axis=0, ddof=1) / math.sqrt(nsamp)
    n_events = (prod > 0.0).sum(axis=0)

    in_window = (seps > math.exp(-n)) & (seps < 1.0)
    usable = in_window & (n_events >= int(min_events)) & (estimates > 0.0)
    if int(np.count_nonzero(usable)) < 2:
        raise ValueError(
            "insufficient surviving samples: only "
            f"{int(np.count_nonzero(usable))} separations in the "
            f"scaling window reach {min_events} joint events; raise N "
            "or coarsen sepGrid"
        )
    xs = np.log(seps[usable])
    ys = np.log(estimates[usable])
    sig = stderrs[usable] / estimates[usable]
    slope, intercept, slope_se, r2 = _linfit(
        xs, ys, sig if np.all(sig > 0.0) else None
    )
    half = 1.959963984540054 * slope_se
    fit = ExponentFit(
        slope=float(slope), intercept=float(intercept),
        ci95=(float(slope - half), float(slope + half)),
        window=(float(seps[usable].min()), float(seps[usable].max())),
        r2=float(r2),
    )

    # factorization probe at the widest separation: covariance of the
    # two weights with a plain moment error for it
    wa, wb = w_base, w_shift[:, -1]
    d = (wa - wa.mean()) * (wb - wb.mean())
    factor_gap = float(d.sum() / (nsamp - 1))
    factor_se = float(d.std(ddof=1) / math.sqrt(nsamp))

    return TwoPointReport(
        a=float(a), lam=float(lam), n=n, proxy=(u_env, c_env),
        separations=seps, estimates=estimates, stderrs=stderrs,
        nEvents=n_events, usedInFit=usable, fit=fit,
        slopeTarget=float(lam * beta - params.nu),
        factorGap=factor_gap, factorSE=factor_se,
    )


def harmonic_exponent(a: float, nu: float, sGrid, N: int, seed: int = 0, *,
                      du: float = _DU, window=None) -> HarmonicReport:
    """Decay rate of the harmonic-measure proxy under tilted sampling.

    Paths run with the drift tilt that realizes the derivative-weighted
    law, under which they concentrate instead of dying out, so plain
    averages of log((h - O) / pi) at each threshold crossing estimate
    the weighted log decay.  The fitted slope is -(1 + beta) and the
    returned alphaHat is its negative.
    """
    params = params_from_nu(a, nu)
    s_arr = _grid("sGrid", sGrid)
    if s_arr[0] <= 0.0:
        raise ValueError("sGrid must start above 0")
    n = int(N)
    if n < 2:
        raise ValueError(f"need at least 2 paths, got {n}")
    levels = s_arr / a
    seeds = _child_seeds(seed, _STREAM_HARMONIC, n)
    recs = np.zeros((n, levels.size, 8))
    t_recs = np.zeros((n, 0, 8))
    states = np.zeros((n, 10))
    kernels.walk_batch(
        seeds, np.ones(n), a, nu, du, _FRAC, _W0, np.inf, np.inf,
        levels, np.empty(0), _EPS_REL, _GAP_TOL, -np.inf,
        recs, t_recs, states,
    )
    gap = recs[:, :, REC_H] - recs[:, :, REC_O]
    ok = (recs[:, :, REC_FLAG] > 0.5) & (gap > 0.0)
    est = np.empty(s_arr.size)
    se = np.empty(s_arr.size)
    for j in range(s_arr.size):
        col = ok[:, j]
        k = int(np.count_nonzero(col))
        if k < 2:
            raise ValueError(
                f"tilted paths failed to resolve depth s={s_arr[j]:g} "
                f"({k} of {n} crossed)"
            )
        logs = np.log(gap[col, j] / math.pi)
        m = float(logs.mean())
        est[j] = math.exp(m)
        se[j] = est[j] * float(logs.std(ddof=1)) / math.sqrt(k)
    curve = MomentCurve(
        sValues=s_arr, estimates=est, stderrs=se,
        method="weighted", params=params, x=1.0,
    )
    fit = fit_exponent(curve, window)
    alpha_hat = -fit.slope
    return HarmonicReport(
        curve=curve, alphaHat=alpha_hat,
        alphaGap=alpha_hat - (1.0 + params.beta), fit=fit,
    )


def _write_rows(fh: IO[str], header, rows) -> None:
    writer = csv.writer(fh)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_FMT % v for v in row])


def write_curve_csv(curve: MomentCurve, file: FileLike) -> None:
    """Dump a moment curve as CSV with columns s, estimate, stderr."""
    rows = zip(curve.sValues, curve.estimates, curve.stderrs)
    if isinstance(file, (str, os.PathLike)):
        with open(file, "w", newline="") as fh:
            _write_rows(fh, ["s", "estimate", "stderr"], rows)
    else:
        _write_rows(file, ["s", "estimate", "stderr"], rows)


def write_cover_csv(report: CoverReport, file: FileLike) -> None:
    """Dump covering counts as CSV with columns n, estimate, stderr."""
    rows = zip(report.nValues, report.counts, report.stderrs)
    if isinstance(file, (str, os.PathLike)):
        with open(file, "w", newline="") as fh:
            _write_rows(fh, ["n", "estimate", "stderr"], rows)
    else:
        _write_rows(file, ["n", "estimate", "stderr"], rows)


def fit_record(fit: ExponentFit, *, params: SpectrumParams = None,
               proxy=None) -> dict:
    """JSON-ready record of a fit with the run parameters beside it."""
    record = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "ci95": [fit.ci95[0], fit.ci95[1]],
        "window": [fit.window[0], fit.window[1]],
        "r2": fit.r2,
        "params": None,
        "proxy": None if proxy is None else [float(v) for v in proxy],
    }
    if params is not None:
        record["params"] = {
            "kappa": params.kappa, "a": params.a, "lam": params.lam,
            "nu": params.nu, "beta": params.beta, "dim": params.dim,
        }
    return record


def write_fit_json(record: dict, file: FileLike) -> None:
    """Write one fit record as JSON."""
    if isinstance(file, (str, os.PathLike)):
        with open(file, "w") as fh:
            json.dump(record, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(record, file, indent=2)
        file.write("\n")
