"""Boundary flow for marked points under a shared driver.

Each marked point x > 0 carries the image h of its distance to the driver,
the log spatial derivative, and two reparameterizing clocks: the u-clock
u = int h^-2 dt and the radius clock s defined through the pathwise
identity (h - O) / h' = C_0 e^{-a s}, where O is the reflected image of
the driver's running extremum and C_0 = h(0).  All points of one
evolution share every noise increment, so ordering and monotonicity in x
hold pathwise, not just in law.

Stepping follows the u-clock of the leading surviving point by default;
in that clock the drift is singularity-free.  A trial step is rejected
and refined whenever any point's h^2 would change by more than the
configured fraction.  Swallowing is declared when h falls below a
relative threshold or the gap h - O is resolved below gap_rel * h; the
point's state is then frozen while the rest keep flowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .algebra import params_from_nu
from .driving import (
    BrownianDriver,
    ConstantDriver,
    Driver,
    SqrtSingularDriver,
    TabulatedDriver,
    evaluate,
)
from . import kernels
from .kernels import (
    MODE_BROWNIAN,
    MODE_CONSTANT,
    MODE_SQRT,
    MODE_TABULATED,
    POL_ADAPTIVE,
    POL_FIXED,
    POL_UCLOCK,
    REC_FLAG,
    REC_H,
    REC_LOGHP,
    REC_O,
    REC_SIG,
    REC_T,
    REC_U,
    ST_SWALLOW_EPS,
    ST_SWALLOW_GAP,
    SV_H,
    SV_LOGHP,
    SV_SIG,
    SV_STATUS,
    SV_T,
    SV_U,
)
from .rng import seed_for


class FlowError(RuntimeError):
    """Raised when an evolution violates its own state contract."""


@dataclass(frozen=True)
class FlowPoint:
    """State of one marked point inside a frame."""

    x0: float
    h: float
    logDeriv: float
    swallowed: bool
    T_x: float | None
    minC: float
    clockU: float
    clockS: float


@dataclass(frozen=True)
class FlowFrame:
    """Snapshot of the whole evolution at one time."""

    t: float
    U: float
    O: float
    points: tuple[FlowPoint, ...]


@dataclass(frozen=True)
class FlowConfig:
    """Evolution parameters.

    policy is one of "u-clock" (fixed steps du in the leading point's
    u-clock), "fixed-dt", or "adaptive" (width-capped steps shrunk only by
    the rejection rule, with the swallow threshold as the effective h
    floor).  c_thresholds is a decreasing ladder of absolute radii whose
    first crossings are recorded at sub-step precision; frame_times is the
    grid of snapshot times.
    """

    a: float
    policy: str = "u-clock"
    du: float = 1e-3
    dt: float = 1e-4
    frac: float = 0.1
    eps_swallow_rel: float = 1e-9
    gap_rel: float = 1e-6
    c_thresholds: tuple[float, ...] = ()
    frame_times: tuple[float, ...] = ()
    horizon: float | None = None
    cell_width: float = 0.25

    def __post_init__(self) -> None:
        if self.a <= 0.0:
            raise ValueError("a must be positive")
        if self.policy not in _POLICY_CODE:
            raise ValueError(f"unknown step policy: {self.policy!r}")
        if self.du <= 0.0 or self.dt <= 0.0 or self.frac <= 0.0:
            raise ValueError("step controls must be positive")
        if self.eps_swallow_rel <= 0.0 or self.gap_rel <= 0.0:
            raise ValueError("swallow thresholds must be positive")
        thr = tuple(float(c) for c in self.c_thresholds)
        if any(c <= 0.0 for c in thr):
            raise ValueError("C thresholds must be positive")
        if any(lo >= hi for hi, lo in zip(thr, thr[1:])):
            raise ValueError("C thresholds must be strictly decreasing")
        object.__setattr__(self, "c_thresholds", thr)
        object.__setattr__(
            self, "frame_times", tuple(float(t) for t in self.frame_times)
        )


_POLICY_CODE = {"u-clock": POL_UCLOCK, "fixed-dt": POL_FIXED,
                "adaptive": POL_ADAPTIVE}


@dataclass(frozen=True)
class FlowRun:
    """Result of evolve(): frames plus exact threshold-crossing records.

    Behaves as a read-only sequence of FlowFrame.  crossing_records[i][j]
    holds (t, u, logDeriv, s, h, O) at the moment point i first reached
    the j-th configured radius threshold, or None if it never did.  final
    holds each point's state at its own stopping time (swallow or
    horizon).  c0 is the starting radius of each point, equal to its
    initial distance to the driver.
    """

    frames: tuple[FlowFrame, ...]
    x0: tuple[float, ...]
    c0: tuple[float, ...]
    config: FlowConfig
    crossing_records: tuple[tuple[tuple[float, ...] | None, ...], ...]
    final: tuple[FlowPoint, ...]

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> FlowFrame:
        return self.frames[i]

    def __iter__(self) -> Iterator[FlowFrame]:
        return iter(self.frames)


def _run_horizon(config: FlowConfig) -> float:
    if config.horizon is not None:
        return config.horizon
    return max(config.frame_times)


def _driver_mode(driver: Driver):
    if isinstance(driver, BrownianDriver):
        return (MODE_BROWNIAN, driver.scale, 0.0, np.empty(0), np.empty(0),
                np.uint64(driver.seed))
    if isinstance(driver, ConstantDriver):
        return (MODE_CONSTANT, 1.0, 0.0, np.empty(0), np.empty(0),
                np.uint64(0))
    if isinstance(driver, SqrtSingularDriver):
        return (MODE_SQRT, 1.0, float(driver.k), np.empty(0), np.empty(0),
                np.uint64(0))
    if isinstance(driver, TabulatedDriver):
        return (MODE_TABULATED, 1.0, 0.0, np.asarray(driver.times, float),
                np.asarray(driver.values, float), np.uint64(0))
    raise TypeError(f"unsupported driver: {type(driver).__name__}")


def evolve(driver: Driver, points: Sequence[float],
           config: FlowConfig) -> FlowRun:
    """Advance all marked points jointly through one driver realization.

    Returns the frame sequence at config.frame_times together with exact
    first-crossing records for the config.c_thresholds ladder.
    """
    xs = np.asarray(sorted(float(x) for x in points))
    if xs.size == 0:
        raise ValueError("need at least one marked point")
    if np.any(xs <= 0.0) or np.unique(xs).size != xs.size:
        raise ValueError("points must be positive and distinct")

    horizon = config.horizon
    if horizon is None:
        horizon = max(config.frame_times, default=0.0)
    if config.frame_times and max(config.frame_times) > horizon + 1e-12:
        raise ValueError("frame times exceed the horizon")
    if horizon <= 0.0:
        raise ValueError("nothing to evolve: set frame_times or horizon")
    if driver.horizon < horizon - 1e-12:
        raise ValueError("driver horizon does not cover the requested time")

    mode, scale, sing_k, tab_t, tab_v, seed = _driver_mode(driver)
    u_start = 0.0 if mode == MODE_BROWNIAN else float(evaluate(driver, 0.0))
    h0 = xs - u_start
    if np.any(h0 <= 0.0):
        raise ValueError("every point must start strictly right of the driver")

    K = xs.size
    thr = np.asarray(config.c_thresholds)
    # absolute radius ladder -> per-point radius-clock levels
    if thr.size:
        sig_levels = (np.log(h0)[:, None] - np.log(thr)[None, :]) / config.a
    else:
        sig_levels = np.zeros((K, 0))
    t_levels = np.asarray(config.frame_times)
    frames_buf = np.zeros((t_levels.size, 3 + 4 * K))
    crossings = np.zeros((K, thr.size, 8))
    states = np.zeros((K, 10))

    kernels.evolve_joint(
        seed, mode, _POLICY_CODE[config.policy], scale, sing_k, tab_t, tab_v,
        u_start, h0, config.a, config.du, config.dt, config.frac,
        config.cell_width, horizon, sig_levels, t_levels,
        config.eps_swallow_rel, config.gap_rel, frames_buf, crossings, states,
    )

    status = states[:, SV_STATUS].astype(int)
    swallowed = np.isin(status, (ST_SWALLOW_EPS, ST_SWALLOW_GAP))
    for i in range(K):
        hf = states[i, SV_H]
        if not np.isfinite(hf) or (hf <= 0.0 and not swallowed[i]):
            raise FlowError(
                f"point x0={xs[i]:g} underflowed (h={hf:g}) without a "
                "swallow flag; the step policy failed"
            )

    t_end = states[:, SV_T]

    def _pt(i: int, h: float, loghp: float, sig: float, sw: bool,
            u: float) -> FlowPoint:
        return FlowPoint(
            x0=float(xs[i]), h=float(h), logDeriv=float(loghp),
            swallowed=sw, T_x=float(t_end[i]) if sw else None,
            minC=float(h0[i] * math.exp(-config.a * sig)),
            clockU=float(u), clockS=float(sig),
        )

    final_pts = tuple(
        _pt(i, states[i, SV_H], states[i, SV_LOGHP], states[i, SV_SIG],
            bool(swallowed[i]), states[i, SV_U])
        for i in range(K)
    )

    frames = []
    for row in frames_buf:
        pts = []
        for i in range(K):
            c = 3 + 4 * i
            # u recovered from log h' = -a u, exact along the flow
            pts.append(_pt(i, row[c], row[c + 1], row[c + 2],
                           row[c + 3] > 0.5, -row[c + 1] / config.a))
        frames.append(FlowFrame(t=float(row[0]), U=float(row[1]),
                                O=float(row[2]), points=tuple(pts)))

    rec_out = []
    for i in range(K):
        per = []
        for j in range(thr.size):
            r = crossings[i, j]
            if r[REC_FLAG] > 0.5:
                per.append((float(r[REC_T]), float(r[REC_U]),
                            float(r[REC_LOGHP]), float(r[REC_SIG]),
                            float(r[REC_H]), float(r[REC_O])))
            else:
                per.append(None)
        rec_out.append(tuple(per))

    return FlowRun(frames=tuple(frames), x0=tuple(float(x) for x in xs),
                   c0=tuple(float(c) for c in h0), config=config,
                   crossing_records=tuple(rec_out), final=final_pts)


def conformal_radius(frame: FlowFrame, point_index: int) -> float:
    """(h - O) / h' for a live point of a frame."""
    p = frame.points[point_index]
    if p.swallowed:
        raise FlowError(f"point x0={p.x0:g} is swallowed at t={frame.t:g}")
    return (p.h - frame.O) * math.exp(-p.logDeriv)


class _Interp:
    """Monotone piecewise-linear map that rejects out-of-range requests."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray, what: str):
        self.xs = xs
        self.ys = ys
        self.what = what

    def __call__(self, x: float) -> float:
        if x < self.xs[0] - 1e-12 or x > self.xs[-1] + 1e-12:
            raise FlowError(
                f"{self.what} is resolved only up to s={self.xs[-1]:g}, "
                f"requested {x:g}"
            )
        return float(np.interp(x, self.xs, self.ys))

    @property
    def last_resolved(self) -> float:
        return float(self.xs[-1])


def _clock_samples(run: FlowRun, idx: int):
    """(s, t, u) knots for one point: frames, crossings, final state."""
    ss = [0.0]
    tt = [0.0]
    uu = [0.0]
    for fr in run.frames:
        p = fr.points[idx]
        if p.swallowed:
            break
        ss.append(p.clockS)
        tt.append(fr.t)
        uu.append(p.clockU)
    for rec in run.crossing_records[idx]:
        if rec is not None:
            tt.append(rec[0])
            uu.append(rec[1])
            ss.append(rec[3])
    fin = run.final[idx]
    ss.append(fin.clockS)
    tt.append(fin.T_x if fin.swallowed else _run_horizon(run.config))
    uu.append(fin.clockU)
    order = np.argsort(tt, kind="stable")
    tt = np.asarray(tt)[order]
    ss = np.asarray(ss)[order]
    uu = np.asarray(uu)[order]
    # the raw radius clock wobbles at scheme-error scale; keep the first
    # sample of each new running maximum so the interpolant is monotone
    runmax = np.maximum.accumulate(ss)
    keep = np.concatenate([[True], ss[1:] > runmax[:-1] + 1e-15])
    return ss[keep], tt[keep], uu[keep]


def radial_clock(run: FlowRun, point_index: int) -> Callable[[float], float]:
    """Map s to the time at which C has decayed to C_0 e^{-a s}.

    s is the point's own radius clock, relative to its starting radius.
    Requests beyond the last resolved s raise FlowError naming that value
    (a swallowed point resolves no further than its swallow reading).
    """
    ss, tt, _ = _clock_samples(run, point_index)
    return _Interp(ss, tt, f"radial clock of x0={run.x0[point_index]:g}")


def L_process(run: FlowRun, point_index: int) -> Callable[[float], float]:
    """Map s to the u-clock reading (= -log h' / a) at radius reading s.

    Starts at zero and is non-decreasing along the interpolant knots.
    """
    ss, _, uu = _clock_samples(run, point_index)
    return _Interp(ss, uu, f"occupation reading of x0={run.x0[point_index]:g}")


def approach_time(run: FlowRun, point_index: int, s: float) -> float | None:
    """First time this point's radius C falls to e^{-s} (absolute level).

    Returns 0.0 when the starting radius is already at or below e^{-s} and
    None when the level was never reached inside the run (in particular
    when the point was swallowed with minC still above e^{-s}).  Levels
    present in the configured ladder resolve at sub-step precision.
    """
    if not np.isfinite(s):
        raise ValueError("s must be finite")
    c_target = math.exp(-s)
    c_start = run.c0[point_index]
    if c_target >= c_start:
        return 0.0
    for j, c in enumerate(run.config.c_thresholds):
        if abs(c - c_target) <= 1e-12 * c_target:
            rec = run.crossing_records[point_index][j]
            return None if rec is None else rec[0]
    # absolute level -> this point's own clock reading
    s_rel = (s + math.log(c_start)) / run.config.a
    clock = radial_clock(run, point_index)
    if s_rel > clock.last_resolved:
        return None
    return clock(s_rel)


def martingale_check(driver: BrownianDriver, x: float, nu: float, s: float,
                     N: int, *, a: float, du: float = 1e-3,
                     with_se: bool = False):
    """Monte Carlo mean of the stopped derivative weight at radius clock s.

    The weight h'^{lam + nu} h^{-nu}, with lam the moment weight paired to
    nu, is constant in expectation when read off at radius-clock times;
    paths swallowed before reaching s contribute zero.  The returned mean
    must sit at x^{-nu} for every s, which is what callers assert.  Only
    positive lam pairs and x >= 1 are accepted.
    """
    if not isinstance(driver, BrownianDriver):
        raise TypeError("the stopped-weight identity needs a Brownian driver")
    if x < 1.0:
        raise ValueError("the check is calibrated for x >= 1")
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    lam = params_from_nu(a, nu).lam
    if lam <= 0.0:
        raise ValueError(
            f"weight pair (nu={nu:g}) has lam={lam:g} <= 0; "
            "the stopped mean is not stable there"
        )
    if s == 0.0:
        # every path starts on the level set, weight x^{-nu} exactly
        return (x ** (-nu), 0.0) if with_se else x ** (-nu)
    n = int(N)
    seeds = np.array([seed_for(driver.seed, 101, i) for i in range(n)],
                     np.uint64)
    x0s = np.full(n, float(x))
    sig_levels = np.array([float(s)])
    sig_recs = np.zeros((n, 1, 8))
    t_recs = np.zeros((n, 0, 8))
    states = np.zeros((n, 10))
    kernels.walk_batch(seeds, x0s, a, 0.0, du, 0.1, 0.25, np.inf, np.inf,
                       sig_levels, np.empty(0), 1e-9, 1e-6, -np.inf,
                       sig_recs, t_recs, states)
    flag = sig_recs[:, 0, REC_FLAG] > 0.5
    hs = np.where(flag, sig_recs[:, 0, REC_H], 1.0)
    vals = np.where(
        flag, np.exp((lam + nu) * sig_recs[:, 0, REC_LOGHP]) * hs ** (-nu),
        0.0,
    )
    mean = float(vals.mean())
    if with_se:
        return mean, float(vals.std(ddof=1) / math.sqrt(n))
    return mean


def write_frames_csv(run: FlowRun, path: str) -> None:
    """Dump the frame sequence; columns t,U,O then one block per point."""
    cols = ["t", "U", "O"]
    for x in run.x0:
        tag = f"{x:g}"
        cols += [f"h[{tag}]", f"logDeriv[{tag}]", f"C[{tag}]",
                 f"swallowed[{tag}]"]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for fr in run.frames:
            vals = [fr.t, fr.U, fr.O]
            for p in fr.points:
                # a swallowed point keeps its last resolved radius
                c = p.minC if p.swallowed else \
                    (p.h - fr.O) * math.exp(-p.logDeriv)
                vals += [p.h, p.logDeriv, c, 1.0 if p.swallowed else 0.0]
            fh.write(",".join(f"{v:.16e}" for v in vals) + "\n")
