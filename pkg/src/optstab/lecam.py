"""Two-point minimax construction: distributions, excess-risk certificates,
and exact total-variation / KL computations.

The construction places two distributions on the symbol space {-1, +1},

    P1(Z = -1) = P2(Z = +1) = 1/2 + delta,   delta = 1 / sqrt(24 n),

pairs them with the designed losses centered at +-r (piecewise convex or
pure quadratic), and certifies a separation Phi(r): any first coordinate at
distance >= r from the population minimizer carries excess risk at least
Phi(r).  Combined with the Bayes error of testing P1^n against P2^n this
yields the minimax lower bounds evaluated in :mod:`optstab.bounds`.

Everything here is deterministic and exact up to floating point: the total
variation between the n-fold products is summed over the n + 1 exchangeable
count classes rather than the 2^n outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .bounds import DEFAULT_CONSTANTS, UniversalConstants, minimax_bound
from .losses import (
    DataPoint,
    LossSpec,
    ValidationError,
    lecam_convex_spec,
    lecam_strongly_convex_spec,
    loss_value,
)

VARIANTS = ("convex", "strongly_convex")
ENUMERATION_LIMIT = 24

_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # golden ratio section


@dataclass(frozen=True)
class TwoPointDistribution:
    """A distribution on {-1, +1} from the n-coupled two-point family."""

    p_minus: float
    n: int
    v: int  # identity, 1 or 2

    def __post_init__(self):
        if self.v not in (1, 2):
            raise ValidationError("identity v must be 1 or 2")
        if not 0.0 < self.p_minus < 1.0:
            raise ValidationError("p_minus must lie in (0, 1)")

    @property
    def p_plus(self) -> float:
        return 1.0 - self.p_minus


def separation_delta(n: int) -> float:
    """delta = 1 / sqrt(24 n)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    return 1.0 / math.sqrt(24.0 * n)


def lecam_distributions(n: int) -> Tuple[TwoPointDistribution, TwoPointDistribution]:
    """The pair (P1, P2) with P1(-1) = P2(+1) = 1/2 + 1/sqrt(24 n)."""
    d = separation_delta(n)
    return (TwoPointDistribution(p_minus=0.5 + d, n=n, v=1),
            TwoPointDistribution(p_minus=0.5 - d, n=n, v=2))


def _loss_spec(variant: str, beta: float, r: float) -> LossSpec:
    if variant == "convex":
        return lecam_convex_spec(beta=beta, r=r)
    if variant == "strongly_convex":
        return lecam_strongly_convex_spec(beta=beta, r=r)
    raise ValidationError(f"unknown variant {variant!r}")


def population_risk(variant: str, v: int, theta1, beta: float, r: float,
                    n: int) -> np.ndarray:
    """E_{Z ~ P_v} l(theta; Z) as a function of the first coordinate (vectorized)."""
    d = separation_delta(n)
    w_minus = 0.5 + d if v == 1 else 0.5 - d
    spec = _loss_spec(variant, beta, r)
    theta1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    vals_minus = np.array([loss_value(spec, [t], DataPoint.symbol(-1)) for t in theta1])
    vals_plus = np.array([loss_value(spec, [t], DataPoint.symbol(1)) for t in theta1])
    return w_minus * vals_minus + (1.0 - w_minus) * vals_plus


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> Tuple[float, float]:
    """Golden-section minimizer of a unimodal scalar function on [lo, hi]."""
    a, b = lo, hi
    c = b - _PHI * (b - a)
    d = a + _PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _PHI * (b - a)
            fd = f(d)
    x = (a + b) / 2.0
    return x, f(x)


def population_minimizer(variant: str, v: int, beta: float, r: float,
                         n: int) -> Tuple[float, float]:
    """(theta1*, minimum value) of the population risk under P_v.

    Strongly convex: closed form theta1* = -+ r / sqrt(6 n) with minimum
    (beta/2)(r^2 - r^2/(6 n)).  Convex: golden-section search on the bracket
    [-r, -r/2] (v = 1; mirrored for v = 2) where the minimizer is known to lie.
    """
    if variant == "strongly_convex":
        sign = -1.0 if v == 1 else 1.0
        theta_star = sign * r / math.sqrt(6.0 * n)
        min_val = 0.5 * beta * (r * r - r * r / (6.0 * n))
        return theta_star, min_val
    lo, hi = (-r, -r / 2.0) if v == 1 else (r / 2.0, r)
    f = lambda t: float(population_risk("convex", v, t, beta, r, n)[0])
    return _golden_min(f, lo, hi)


def population_excess_risk(variant: str, v: int, theta1: float, beta: float,
                           r: float, n: int) -> float:
    """Excess population risk E_{P_v} l(theta; Z) - min over theta."""
    _, min_val = population_minimizer(variant, v, beta, r, n)
    val = float(population_risk(variant, v, theta1, beta, r, n)[0])
    return val - min_val


def phi_formula(variant: str, beta: float, r: float, n: int) -> float:
    """The certified separation: beta r^2 / sqrt(96 n) (convex),
    beta r^2 / (12 n) (strongly convex)."""
    if variant == "convex":
        return beta * r * r / math.sqrt(96.0 * n)
    if variant == "strongly_convex":
        return beta * r * r / (12.0 * n)
    raise ValidationError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class PhiCertificate:
    variant: str
    r: float
    beta: float
    n: int
    phi: float        # claimed separation
    grid_min: float   # smallest excess risk found at distance >= r
    passed: bool


def phi_certificate(variant: str, n: int, beta: float, r: float,
                    resolution: float = None) -> PhiCertificate:
    """Grid-certify that excess risk >= Phi(r) whenever |theta1 - theta_v*| >= r.

    The feasible first coordinate ranges over [-r, r] (the domain whose half
    width the construction sets to r).  The grid resolution must be at most
    r / 200; the certificate passes when the grid minimum over both
    identities clears Phi(r) up to relative slack 1e-6.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if resolution is None:
        resolution = r / 200.0
    if resolution > r / 200.0 + 1e-15:
        raise ValidationError("grid too coarse: need resolution <= r/200")
    phi = phi_formula(variant, beta, r, n)
    grid_min = math.inf
    m = int(math.ceil(2.0 * r / resolution)) + 1
    grid = np.linspace(-r, r, m)
    for v in (1, 2):
        theta_star, min_val = population_minimizer(variant, v, beta, r, n)
        far = grid[np.abs(grid - theta_star) >= r]
        if far.size == 0:
            continue
        vals = population_risk(variant, v, far, beta, r, n) - min_val
        grid_min = min(grid_min, float(vals.min()))
    passed = grid_min >= phi * (1.0 - 1e-6)
    return PhiCertificate(variant=variant, r=r, beta=beta, n=n, phi=phi,
                          grid_min=grid_min, passed=passed)


def tv_kl_product(n: int) -> Tuple[float, float]:
    """Exact TV(P1^n, P2^n) and n * KL(P1 || P2) for the n-coupled pair.

    TV is computed by summing over the n + 1 exchangeable classes (count of
    +1 outcomes); KL uses the two-point divergence
    2 delta log((1 + 2 delta)/(1 - 2 delta)) with 2 delta = 1/sqrt(6 n).
    """
    if not 1 <= n <= ENUMERATION_LIMIT:
        raise ValidationError(f"exact enumeration supports 1 <= n <= {ENUMERATION_LIMIT}")
    d = separation_delta(n)
    p_minus = 0.5 + d  # P1(-1); P1(+1) = 0.5 - d, P2 mirrored
    ks = np.arange(n + 1)
    log_comb = np.array([math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                         for k in ks])
    # probability of k "+1" outcomes under each product measure
    logp1 = log_comb + ks * math.log(0.5 - d) + (n - ks) * math.log(p_minus)
    logp2 = log_comb + ks * math.log(p_minus) + (n - ks) * math.log(0.5 - d)
    tv = 0.5 * float(np.abs(np.exp(logp1) - np.exp(logp2)).sum())
    two_delta = 2.0 * d  # equals 1/sqrt(6 n)
    kl = n * two_delta * math.log((1.0 + two_delta) / (1.0 - two_delta))
    return tv, kl


def bayes_test_error(n: int) -> float:
    """Minimal worst-case test error distinguishing P1^n from P2^n: (1 - TV)/2."""
    tv, _ = tv_kl_product(n)
    return (1.0 - tv) / 2.0


def minimax_consistency(n: int, R: float, beta: float,
                        consts: UniversalConstants = DEFAULT_CONSTANTS) -> dict:
    """Relate the certified separation at r = R/2 to the displayed minimax rates.

    For the convex class, Phi(R/2)/4 evaluates to exactly four times the
    displayed rate R^2 beta / (C1 sqrt(n)); for the strongly convex class
    Phi(R/2)/4 reproduces R^2 beta / (192 n) exactly.
    """
    r = R / 2.0
    out = {}
    for variant, setting in (("convex", "convex"),
                             ("strongly_convex", "strongly_convex")):
        phi_quarter = phi_formula(variant, beta, r, n) / 4.0
        out[variant] = {
            "phi_quarter": phi_quarter,
            "minimax": minimax_bound(setting, n, R, beta, consts),
        }
    return out
