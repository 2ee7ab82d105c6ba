"""Exponent algebra for the boundary spectrum of chordal SLE.

Conventions.  The curve parameter is kappa in (4, 8); the half-plane capacity
normalization used throughout is a = 2/kappa in (1/4, 1/2), so the driving
process is a standard Brownian motion.  Three exponents are tied together:

    nu_c = 2a - 1/2,   nu_0 = 4a - 1,   lambda_crit = -nu_c^2 / (2a)

    beta(nu)   = a / (nu - nu_c)                (decay rate of the derivative)
    lambda(nu) = nu (nu - 2 nu_c) / (2a)        (moment weight)
    nu(lambda) = nu_c + sqrt(nu_c^2 + 2 a lambda)

and the dimension spectrum in the beta parameterization is

    dim(beta) = 3/2 + beta (1 - 1/(8a)) - a (1 + 2 beta)^2 / (2 beta)
              = 1 + lambda beta - nu.

dim has a single maximum 2 - 4a at beta_hat = 2a/(4a - 1) and vanishes at

    beta_pm = a / (3/2 -+ sqrt(2 - 4a) - 2a).

The stationary law of the weighted boundary ratio is Beta(p, q) with
p = 2 nu + 2 - 4a, q = 2a, and the ergodic average of x^{-1}(1-x) under it
equals beta (closed form q/(p-1)).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, sqrt, exp, log

import numpy as np
from scipy import integrate, special


class DomainError(ValueError):
    """Parameter outside the admissible domain."""


def _check_a(a: float) -> None:
    if not (0.25 < a < 0.5):
        raise DomainError(f"capacity parameter a must lie in (1/4, 1/2), got {a}")


def a_from_kappa(kappa: float) -> float:
    if not (4.0 < kappa < 8.0):
        raise DomainError(f"kappa must lie in (4, 8), got {kappa}")
    return 2.0 / kappa


def nu_critical(a: float) -> float:
    _check_a(a)
    return 2.0 * a - 0.5


def nu_hitting(a: float) -> float:
    """Exponent of the one-arm boundary hitting probability."""
    _check_a(a)
    return 4.0 * a - 1.0


def lambda_critical(a: float) -> float:
    _check_a(a)
    nc = 2.0 * a - 0.5
    return -nc * nc / (2.0 * a)


@dataclass(frozen=True)
class SpectrumParams:
    """One consistent point (lambda, nu, beta, dim) of the exponent algebra."""

    kappa: float
    a: float
    lam: float
    nu: float
    beta: float
    dim: float

    def __post_init__(self) -> None:
        _check_a(self.a)
        nc = nu_critical(self.a)
        rt = nc + sqrt(nc * nc + 2.0 * self.a * self.lam)
        if abs(rt - self.nu) > 1e-12 * max(1.0, abs(self.nu)):
            raise DomainError(
                f"inconsistent parameters: nu={self.nu} but lambda={self.lam} implies nu={rt}"
            )
        d2 = dimension_of_beta(self.a, self.beta)
        if abs(self.dim - d2) > 1e-12 * max(1.0, abs(d2)):
            raise DomainError(f"inconsistent dimension: {self.dim} vs {d2}")


def params_from_lambda(a: float, lam: float) -> SpectrumParams:
    """Resolve the algebra from the moment weight lambda > lambda_crit."""
    _check_a(a)
    lc = lambda_critical(a)
    if lam <= lc:
        raise DomainError(f"lambda must exceed lambda_crit={lc}, got {lam}")
    nc = nu_critical(a)
    disc = sqrt(nc * nc + 2.0 * a * lam)
    nu = nc + disc
    beta = a / disc
    dim = 1.0 + lam * beta - nu
    return SpectrumParams(kappa=2.0 / a, a=a, lam=lam, nu=nu, beta=beta, dim=dim)


def params_from_nu(a: float, nu: float) -> SpectrumParams:
    """Resolve the algebra from the decay exponent nu > nu_c."""
    _check_a(a)
    nc = nu_critical(a)
    if nu <= nc:
        raise DomainError(f"nu must exceed nu_c={nc}, got {nu}")
    lam = nu * (nu - 2.0 * nc) / (2.0 * a)
    beta = a / (nu - nc)
    dim = 1.0 + lam * beta - nu
    return SpectrumParams(kappa=2.0 / a, a=a, lam=lam, nu=nu, beta=beta, dim=dim)


def params_from_beta(a: float, beta: float) -> SpectrumParams:
    """Resolve the algebra from the derivative decay rate beta > 0."""
    _check_a(a)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    return params_from_nu(a, a / beta + nu_critical(a))


def dimension_of_beta(a: float, beta: float) -> float:
    _check_a(a)
    if beta <= 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    one_plus = 1.0 + 2.0 * beta
    return 1.5 + beta * (1.0 - 1.0 / (8.0 * a)) - a * one_plus * one_plus / (2.0 * beta)


@dataclass(frozen=True)
class BetaRange:
    """Zero crossings and maximizer of the dimension spectrum."""

    beta_minus: float
    beta_hat: float
    beta_plus: float

    def __post_init__(self) -> None:
        if not (0.0 < self.beta_minus < self.beta_hat < self.beta_plus):
            raise DomainError("beta endpoints out of order")


def beta_endpoints(a: float) -> BetaRange:
    _check_a(a)
    root = sqrt(2.0 - 4.0 * a)
    return BetaRange(
        beta_minus=a / (1.5 + root - 2.0 * a),
        beta_hat=2.0 * a / (4.0 * a - 1.0),
        beta_plus=a / (1.5 - root - 2.0 * a),
    )


def xi_dimension(kappa: float, alpha: float) -> float:
    """Dimension of the set where harmonic measure decays with exponent alpha.

    Equals dimension_of_beta(2/kappa, alpha - 1); requires alpha > 1.
    """
    a = a_from_kappa(kappa)
    if alpha <= 1.0:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    t = 1.0 - 2.0 * alpha
    return 0.5 + kappa / 16.0 + alpha * (1.0 - kappa / 16.0) - t * t / (kappa * (alpha - 1.0))


@dataclass(frozen=True)
class InvariantLaw:
    """Beta(p, q) stationary law of the weighted boundary ratio."""

    p: float
    q: float
    log_norm: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x > 0.0) & (x < 1.0)
        xi = x[inside]
        out[inside] = np.exp(
            self.log_norm + (self.p - 1.0) * np.log(xi) + (self.q - 1.0) * np.log1p(-xi)
        )
        return out

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return special.betainc(self.p, self.q, x)

    def mean(self) -> float:
        return self.p / (self.p + self.q)


def invariant_law(a: float, nu: float) -> InvariantLaw:
    _check_a(a)
    if nu <= nu_critical(a):
        raise DomainError(f"nu must exceed nu_c={nu_critical(a)}, got {nu}")
    p = 2.0 * nu + 2.0 - 4.0 * a
    q = 2.0 * a
    log_norm = lgamma(p + q) - lgamma(p) - lgamma(q)
    return InvariantLaw(p=p, q=q, log_norm=log_norm)


def stationary_ergodic_beta(a: float, nu: float) -> float:
    """Ergodic mean of x^{-1}(1-x) under the invariant law, by quadrature.

    Agrees with beta(nu) = a/(nu - nu_c); kept as an integral so tests can
    pit the two routes against each other.
    """
    law = invariant_law(a, nu)

    def integrand(x: float) -> float:
        return (1.0 - x) / x * exp(
            law.log_norm + (law.p - 1.0) * log(x) + (law.q - 1.0) * np.log1p(-x)
        )

    val, err = integrate.quad(integrand, 0.0, 1.0, limit=200, points=[0.0, 1.0])
    if err > 1e-9 * max(1.0, abs(val)):
        raise ArithmeticError(f"quadrature did not converge: value={val}, err={err}")
    return val
