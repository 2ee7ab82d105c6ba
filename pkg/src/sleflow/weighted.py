"""Reweighted boundary-ratio diffusion and its path statistics.

Under the derivative-weighted measure the boundary ratio becomes an
autonomous diffusion on [0, 1] started at 1.  This module simulates that
diffusion, accumulates the additive clock functional L(s) = integral of
(1 - A)/A, and builds the Monte Carlo statistics on top of it: the
occupation test against the stationary Beta law, the importance-sampled
derivative moment, exponential moments of the centred clock, and the
fraction of paths that stay inside a two-sided concentration envelope.

All randomness is counter-based: a master seed plus a path index fully
determine a trajectory, so batches are reproducible in any execution
order and are aggregated in seed order.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass
from typing import IO, Iterable, Union

import numpy as np

from . import kernels
from .algebra import (
    invariant_law,
    params_from_lambda,
    params_from_nu,
)
from .rng import seed_for

__all__ = [
    "ConcentrationReport",
    "WeightedPath",
    "concentration_fraction",
    "exp_moment",
    "occupation_test",
    "report_record",
    "simulate_A_star",
    "weighted_moment",
    "write_path_csv",
    "write_reports_json",
]

_STREAM_PATH = 17  # word mixed into every per-path child seed
_EVAL_FLOOR = 1e-4  # floor under A before a negative power is taken
_FMT = "%.16e"

FileLike = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class WeightedPath:
    """One trajectory of the reweighted ratio with its clock integral.

    ``sGrid`` starts at 0 where A = 1 and L = 0.  ``floor_binds`` counts
    Euler steps whose clock integrand hit the internal 1e-8 floor; zero
    means the floor never bound.
    """

    a: float
    nu: float
    sGrid: np.ndarray
    A: np.ndarray
    L: np.ndarray
    floor_binds: int

    def __len__(self) -> int:
        return int(self.sGrid.shape[0])


@dataclass(frozen=True)
class ConcentrationReport:
    """Empirical pass rate of the envelope event, with binomial error."""

    u: float
    c: float
    t: float
    fraction: float
    nSamples: int
    se: float


def _obs_grid(total: float, spacing: float) -> np.ndarray:
    # multiples of spacing with the last entry clamped to the horizon
    nseg = max(1, int(np.ceil(total / spacing - 1e-9)))
    return np.minimum(np.arange(1, nseg + 1, dtype=float) * spacing, total)


def _child_seeds(master: int, n: int) -> np.ndarray:
    return np.array(
        [seed_for(master, _STREAM_PATH, i) for i in range(n)], dtype=np.uint64
    )


def _run_batch(a, nu, step, obs, seeds):
    obs = np.ascontiguousarray(obs, dtype=float)
    a_out = np.empty((seeds.shape[0], obs.shape[0]), dtype=float)
    u_out = np.empty_like(a_out)
    bind_out = np.zeros(seeds.shape[0], dtype=np.int64)
    kernels.a_star_batch(
        seeds, float(a), float(nu), float(step), obs, a_out, u_out, bind_out
    )
    return a_out, u_out, bind_out


def _batch_means_se(vals: np.ndarray) -> float:
    """Standard error from seed-ordered batch means.

    More robust than the plain sample error when the integrand has a
    heavy tail near A = 0, and identical in distribution for iid input.
    """
    n = vals.size
    nb = min(n, max(2, int(round(np.sqrt(n)))))
    edges = np.linspace(0, n, nb + 1).astype(np.int64)
    means = np.array([vals[lo:hi].mean() for lo, hi in zip(edges[:-1], edges[1:])])
    return float(np.std(means, ddof=1) / np.sqrt(nb))


def simulate_A_star(
    a: float,
    nu: float,
    sMax: float,
    step: float = 1e-3,
    seed: int = 0,
    *,
    obs_spacing: float = 0.5,
) -> WeightedPath:
    """Simulate one reweighted-ratio path on [0, sMax].

    Full-truncation Euler: drift and diffusion coefficients are read off
    the state clamped to [0, 1], and the state is clamped again after the
    step.  The clock L is a trapezoid sum of (1 - A)/A with the integrand
    floored at 1e-8 (``floor_binds`` reports how often that bound).  The
    path is recorded every ``obs_spacing`` time units plus the endpoint;
    the seed alone determines the trajectory.
    """
    invariant_law(a, nu)  # validates a and nu > nu_c
    if not np.isfinite(sMax) or sMax <= 0.0:
        raise ValueError(f"sMax must be positive and finite, got {sMax}")
    if not 0.0 < step <= sMax:
        raise ValueError(f"step must lie in (0, sMax], got {step}")
    if obs_spacing < step:
        raise ValueError(
            f"obs_spacing must be at least one step, got {obs_spacing} < {step}"
        )
    obs = _obs_grid(float(sMax), float(obs_spacing))
    seeds = np.array([np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)])
    a_out, u_out, bind_out = _run_batch(a, nu, step, obs, seeds)
    s_grid = np.concatenate([[0.0], obs])
    return WeightedPath(
        a=float(a),
        nu=float(nu),
        sGrid=s_grid,
        A=np.concatenate([[1.0], a_out[0]]),
        L=np.concatenate([[0.0], u_out[0]]),
        floor_binds=int(bind_out[0]),
    )


def occupation_test(path: WeightedPath, burnIn: float) -> float:
    """Sup distance between the post-burn-in occupation CDF and Beta(p, q).

    Needs at least 100 time units of path after the burn-in.
    """
    law = invariant_law(path.a, path.nu)
    if burnIn < 0.0:
        raise ValueError(f"burnIn must be non-negative, got {burnIn}")
    horizon = float(path.sGrid[-1])
    if horizon - burnIn < 100.0 - 1e-9:
        raise ValueError(
            "insufficient samples: need at least 100 time units after burn-in, "
            f"got {horizon - burnIn:g}"
        )
    x = np.sort(path.A[path.sGrid >= burnIn])
    n = x.size
    cdf = law.cdf(x)
    upper = np.arange(1, n + 1, dtype=float) / n
    lower = np.arange(0, n, dtype=float) / n
    return float(np.max(np.maximum(upper - cdf, cdf - lower)))


def weighted_moment(
    a: float,
    lam: float,
    x: float,
    s: float,
    N: int,
    seed: int = 0,
    *,
    step: float = 1e-3,
) -> tuple:
    """Derivative moment of weight lam at clock time s, from N paths.

    Uses the tilted representation value = x^{-nu} e^{-a nu s} E[A_s^{-nu}]
    with the expectation under the weighted path law started at A = 1.
    A is floored at 1e-4 before the negative power is taken; the floor
    only guards discretization excursions to 0 and is time-independent.
    Returns (value, batch-means standard error).  At s = 0 the value is
    x^{-nu} exactly.
    """
    par = params_from_lambda(a, lam)  # validates a and lam > lambda_crit
    if x < 1.0:
        raise ValueError(f"x must be at least 1, got {x}")
    if s < 0.0:
        raise ValueError(f"s must be non-negative, got {s}")
    prefactor = float(x) ** (-par.nu)
    if s == 0.0:
        return prefactor, 0.0
    if N < 2:
        raise ValueError(f"need at least 2 paths, got {N}")
    a_out, _, _ = _run_batch(
        a, par.nu, step, np.array([float(s)]), _child_seeds(seed, N)
    )
    vals = np.maximum(a_out[:, 0], _EVAL_FLOOR) ** (-par.nu)
    scale = prefactor * float(np.exp(-a * par.nu * s))
    return scale * float(vals.mean()), scale * _batch_means_se(vals)


def exp_moment(
    a: float,
    nu: float,
    p: float,
    t: float,
    N: int,
    seed: int = 0,
    *,
    step: float = 1e-3,
) -> tuple:
    """Mean of exp(p |L_t - beta t| / sqrt(t)) over N paths, with error.

    Bounded in t when the concentration of the clock holds; callers probe
    a grid of t values and look for a growth trend.
    """
    par = params_from_nu(a, nu)
    if p <= 0.0:
        raise ValueError(f"p must be positive, got {p}")
    if t < 1.0:
        raise ValueError(f"t must be at least 1, got {t}")
    if N < 2:
        raise ValueError(f"need at least 2 paths, got {N}")
    _, u_out, _ = _run_batch(a, nu, step, np.array([float(t)]), _child_seeds(seed, N))
    vals = np.exp(p * np.abs(u_out[:, 0] - par.beta * t) / np.sqrt(t))
    return float(vals.mean()), _batch_means_se(vals)


def concentration_fraction(
    a: float,
    nu: float,
    u: float,
    c: float,
    t: float,
    N: int,
    seed: int = 0,
    *,
    step: float = 1e-3,
    grid_spacing: float = 0.5,
) -> ConcentrationReport:
    """Fraction of paths whose clock stays inside the two-sided envelope.

    A path passes when at every grid time s in (0, t], both
    forward:   |L_s - beta s|             <= u sqrt(s) log(2 + s) + c
    backward:  |L_t - L_s - beta (t - s)| <= u sqrt(t - s) log(2 + t - s) + c
    hold.  The fraction is non-decreasing in u and in c.  u = 0 or c = 0
    are allowed as degenerate probes.
    """
    par = params_from_nu(a, nu)
    if u < 0.0 or c < 0.0:
        raise ValueError(f"envelope parameters must be non-negative, got u={u}, c={c}")
    if t <= 0.0:
        raise ValueError(f"t must be positive, got {t}")
    if N < 1:
        raise ValueError(f"need at least 1 path, got {N}")
    obs = _obs_grid(float(t), float(grid_spacing))
    _, u_out, _ = _run_batch(a, nu, step, obs, _child_seeds(seed, N))
    s_row = obs[None, :]
    forward = np.abs(u_out - par.beta * s_row) <= u * np.sqrt(s_row) * np.log(
        2.0 + s_row
    ) + c
    back = t - obs
    terminal = u_out[:, -1][:, None]
    backward = np.abs(terminal - u_out - par.beta * back[None, :]) <= u * np.sqrt(
        back[None, :]
    ) * np.log(2.0 + back[None, :]) + c
    passed = np.all(forward, axis=1) & np.all(backward, axis=1)
    fraction = float(passed.mean())
    se = float(np.sqrt(fraction * (1.0 - fraction) / N))
    return ConcentrationReport(
        u=float(u), c=float(c), t=float(t), fraction=fraction, nSamples=int(N), se=se
    )


def _write_path_rows(path: WeightedPath, fh: IO[str]) -> None:
    writer = csv.writer(fh)
    writer.writerow(["s", "A", "L"])
    for s, av, lv in zip(path.sGrid, path.A, path.L):
        writer.writerow([_FMT % s, _FMT % av, _FMT % lv])


def write_path_csv(path: WeightedPath, file: FileLike) -> None:
    """Dump the sampled path as CSV with columns s, A, L."""
    if isinstance(file, (str, os.PathLike)):
        with open(file, "w", newline="") as fh:
            _write_path_rows(path, fh)
    else:
        _write_path_rows(path, file)


def report_record(a: float, nu: float, report: ConcentrationReport) -> dict:
    """JSON-ready record with every input parameter echoed beside the result."""
    record = {"a": float(a), "nu": float(nu)}
    record.update(asdict(report))
    return record


def write_reports_json(records: Iterable[dict], file: FileLike) -> None:
    """Write an iterable of report records as a JSON array."""
    data = list(records)
    if isinstance(file, (str, os.PathLike)):
        with open(file, "w") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(data, file, indent=2)
        file.write("\n")
