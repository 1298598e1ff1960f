"""Brute-force verification of spectral-norm envelopes for the 2x2
companion-matrix products that drive the momentum stability analysis.

Three product families are audited, plus one scalar recursion:

* ``nag_convex``  H_i = [[(1-g_i) h, g_i h], [1, 0]],  0 <= h <= 1, -1 < g_i < 1;
  envelope ||H_t ... H_1|| <= 2 (t + 1).
* ``hb``          H = [[1 + g - a, -g], [1, 0]],  0 <= g < 1, 0 <= a <= 1 - g;
  envelope ||H^t|| <= 2 / (1 - sqrt(g)).
* ``nag_sc``      H = [[(1+g) h, -g h], [1, 0]] with g = (sqrt(k)-1)/(sqrt(k)+1)
  and h in [1 - beta eta, 1 - alpha eta].  The certified envelope is
  2 (1 + t) rho^(t-1) where rho is the spectral radius of H: the top row of
  H^t is a degree-t root sum bounded by (t+1) rho^t, and the bottom row lags
  it by exactly one factor of rho.  The tighter-looking 2 (1+t) (g (1-alpha
  eta))^(t/2) envelope fails on that lagging row (see tests for a concrete
  violation), so the ``ok`` verdict uses the certified form and the other is
  reported alongside for reference.
* ``recursion_u`` a_{i+1} = 2 h a_i - h a_{i-1}, a_0 = 1, a_1 = 2h; for
  0 <= h <= 1 both characteristic roots have modulus sqrt(h), giving
  |a_i| <= i + 1.  (At h = 1 the sequence is exactly i + 1.)

Products are accumulated left-to-right, P <- H P, matching the analysis
order.  Searches vectorize over parameter samples; results are max
reductions, so they are order independent and safe to shard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .losses import ValidationError

LEMMAS = ("nag_convex", "hb", "nag_sc", "recursion_u")
TOL = 1e-9


def spectral_norm(M) -> float:
    """Largest singular value of a 2x2 matrix, in closed form."""
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise ValidationError("spectral_norm expects a 2x2 matrix")
    return float(_batch_spectral_norm(M[None, :, :])[0])


def _batch_spectral_norm(Ms: np.ndarray) -> np.ndarray:
    """sigma_max for a stack (..., 2, 2): sqrt((F^2 + sqrt(F^4 - 4 det^2)) / 2)."""
    fro2 = np.sum(Ms * Ms, axis=(-2, -1))
    det = Ms[..., 0, 0] * Ms[..., 1, 1] - Ms[..., 0, 1] * Ms[..., 1, 0]
    inner = np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0)
    return np.sqrt(np.maximum((fro2 + np.sqrt(inner)) / 2.0, 0.0))


@dataclass(frozen=True)
class LemmaCheck:
    """Outcome of one envelope check: measured norm vs. claimed bound."""

    lemma: str
    norm: float
    bound: float
    ok: bool
    t: int
    params: dict = field(default_factory=dict)


def nag_lemma_check(h: float, gammas: Sequence[float]) -> LemmaCheck:
    """Check ||H_t ... H_1|| <= 2 (t + 1) for a vanishing-momentum product."""
    gammas = np.asarray(gammas, dtype=float)
    t = len(gammas)
    if t < 1:
        raise ValidationError("need at least one factor")
    if not 0.0 <= h <= 1.0:
        raise ValidationError("nag_convex needs 0 <= h <= 1")
    if np.any(np.abs(gammas) >= 1.0):
        raise ValidationError("nag_convex needs -1 < gamma_i < 1")
    P = np.eye(2)
    for g in gammas:
        H = np.array([[(1.0 - g) * h, g * h], [1.0, 0.0]])
        P = H @ P
    norm = spectral_norm(P)
    bound = 2.0 * (t + 1)
    return LemmaCheck(lemma="nag_convex", norm=norm, bound=bound,
                      ok=norm <= bound + TOL, t=t, params={"h": h})


def hb_lemma_check(gamma: float, a: float, t: int) -> LemmaCheck:
    """Check ||H^t|| <= 2 / (1 - sqrt(gamma)) for the fixed-momentum matrix."""
    if not 0.0 <= gamma < 1.0:
        raise ValidationError("hb needs 0 <= gamma < 1")
    if not 0.0 <= a <= 1.0 - gamma:
        raise ValidationError("hb needs 0 <= a <= 1 - gamma")
    if t < 0:
        raise ValidationError("t must be >= 0")
    H = np.array([[1.0 + gamma - a, -gamma], [1.0, 0.0]])
    P = np.eye(2)
    for _ in range(t):
        P = H @ P
    norm = spectral_norm(P)
    bound = 2.0 / (1.0 - math.sqrt(gamma))
    return LemmaCheck(lemma="hb", norm=norm, bound=bound, ok=norm <= bound + TOL,
                      t=t, params={"gamma": gamma, "a": a})


def _companion_radius(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Spectral radius of [[p, -q], [1, 0]], i.e. largest root modulus of
    x^2 - p x + q (vectorized)."""
    disc = p * p - 4.0 * q
    real = disc >= 0
    out = np.empty_like(p)
    sq = np.sqrt(np.abs(disc))
    out[real] = np.maximum(np.abs(p[real] + sq[real]), np.abs(p[real] - sq[real])) / 2.0
    out[~real] = np.sqrt(np.maximum(q[~real], 0.0))
    return out


def scnag_h_range(alpha: float, beta: float, eta: float) -> Tuple[float, float]:
    return 1.0 - beta * eta, 1.0 - alpha * eta


def scnag_lemma_check(kappa: float, alpha: float, beta: float, eta: float, t: int,
                      h_samples: int = 64) -> LemmaCheck:
    """Check the fixed-momentum strongly convex product envelope.

    Samples h at ``h_samples`` equispaced interior points of
    [1 - beta eta, 1 - alpha eta] plus both endpoints, forms H^t per sample,
    and compares the largest norm against the certified envelope
    2 (1 + t) rho^(t-1) (rho the largest sampled spectral radius; the t = 0
    product is the identity with bound 2).  The record's params carry
    ``bound_nominal`` = 2 (1 + t) (g (1 - alpha eta))^(t/2) for reference.
    """
    if kappa < 1:
        raise ValidationError("kappa must be >= 1")
    if alpha <= 0 or beta <= 0 or abs(beta - kappa * alpha) > 1e-9 * beta:
        raise ValidationError("need alpha > 0 and beta = kappa * alpha")
    if not 0 < eta <= 1.0 / beta + 1e-12:
        raise ValidationError("need 0 < eta <= 1/beta")
    if t < 0:
        raise ValidationError("t must be >= 0")
    gamma = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)
    lo, hi = scnag_h_range(alpha, beta, eta)
    hs = np.linspace(lo, hi, h_samples + 2)
    Ps = np.broadcast_to(np.eye(2), (hs.size, 2, 2)).copy()
    Hs = np.zeros((hs.size, 2, 2))
    Hs[:, 0, 0] = (1.0 + gamma) * hs
    Hs[:, 0, 1] = -gamma * hs
    Hs[:, 1, 0] = 1.0
    for _ in range(t):
        Ps = Hs @ Ps
    norm = float(_batch_spectral_norm(Ps).max())
    rho = float(_companion_radius((1.0 + gamma) * hs, gamma * hs).max())
    bound = 2.0 if t == 0 else 2.0 * (1 + t) * rho ** (t - 1)
    nominal = 2.0 * (1 + t) * (gamma * (1.0 - alpha * eta)) ** (t / 2.0)
    return LemmaCheck(
        lemma="nag_sc", norm=norm, bound=bound, ok=norm <= bound + TOL, t=t,
        params={"kappa": kappa, "alpha": alpha, "beta": beta, "eta": eta,
                "gamma": gamma, "rho": rho, "bound_nominal": nominal})


def recursion_u(h: float, t: int) -> np.ndarray:
    """Unroll a_{i+1} = 2h a_i - h a_{i-1} (a_0 = 1, a_1 = 2h) for i <= t.

    Raises if any |a_i| exceeds i + 1, which cannot happen for 0 <= h <= 1.
    """
    if not 0.0 <= h <= 1.0:
        raise ValidationError("recursion_u needs 0 <= h <= 1")
    if t < 0:
        raise ValidationError("t must be >= 0")
    a = np.empty(t + 1)
    a[0] = 1.0
    if t >= 1:
        a[1] = 2.0 * h
    for i in range(1, t):
        a[i + 1] = 2.0 * h * a[i] - h * a[i - 1]
    limit = np.arange(t + 1) + 1.0
    bad = np.abs(a) > limit + TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise RuntimeError(f"recursion bound |a_i| <= i+1 violated at i={i}: a_i={a[i]}")
    return a


@dataclass(frozen=True)
class SweepResult:
    """Outcome of a parameter sweep: worst norm/bound ratio and any violations."""

    lemma: str
    max_ratio: float
    witness: dict
    counterexamples: List[dict]
    checks: int

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def nag_sweep(draws: int, t_max: int, seed: int = 0) -> SweepResult:
    """Random search over the vanishing-momentum hypothesis box.

    Each draw fixes h ~ U[0, 1] and a fresh gamma_i ~ U(-1, 1) per factor;
    every prefix length s <= t_max is checked against 2 (s + 1).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    hs = rng.uniform(0.0, 1.0, size=draws)
    Ps = np.broadcast_to(np.eye(2), (draws, 2, 2)).copy()
    max_ratio, witness = -np.inf, {}
    counterexamples: List[dict] = []
    H = np.zeros((draws, 2, 2))
    H[:, 1, 0] = 1.0
    for s in range(1, t_max + 1):
        g = rng.uniform(-1.0, 1.0, size=draws)
        H[:, 0, 0] = (1.0 - g) * hs
        H[:, 0, 1] = g * hs
        Ps = H @ Ps
        ratios = _batch_spectral_norm(Ps) / (2.0 * (s + 1))
        i = int(np.argmax(ratios))
        if ratios[i] > max_ratio:
            max_ratio = float(ratios[i])
            witness = {"h": float(hs[i]), "t": s, "draw": i}
        for j in np.nonzero(ratios > 1.0 + TOL)[0]:
            counterexamples.append({"h": float(hs[j]), "t": s, "draw": int(j),
                                    "ratio": float(ratios[j])})
    return SweepResult(lemma="nag_convex", max_ratio=max_ratio, witness=witness,
                       counterexamples=counterexamples, checks=draws * t_max)


def hb_sweep(gammas: Sequence[float], a_points: int, t_max: int) -> SweepResult:
    """Grid search over (gamma, a) with every power t <= t_max checked."""
    pairs = [(g, a) for g in gammas for a in np.linspace(0.0, 1.0 - g, a_points)]
    G = np.array([p[0] for p in pairs])
    A = np.array([p[1] for p in pairs])
    H = np.zeros((len(pairs), 2, 2))
    H[:, 0, 0] = 1.0 + G - A
    H[:, 0, 1] = -G
    H[:, 1, 0] = 1.0
    bounds = 2.0 / (1.0 - np.sqrt(G))
    Ps = np.broadcast_to(np.eye(2), (len(pairs), 2, 2)).copy()
    max_ratio, witness = -np.inf, {}
    counterexamples: List[dict] = []
    for s in range(1, t_max + 1):
        Ps = H @ Ps
        ratios = _batch_spectral_norm(Ps) / bounds
        i = int(np.argmax(ratios))
        if ratios[i] > max_ratio:
            max_ratio = float(ratios[i])
            witness = {"gamma": float(G[i]), "a": float(A[i]), "t": s}
        for j in np.nonzero(ratios > 1.0 + TOL)[0]:
            counterexamples.append({"gamma": float(G[j]), "a": float(A[j]),
                                    "t": s, "ratio": float(ratios[j])})
    return SweepResult(lemma="hb", max_ratio=max_ratio, witness=witness,
                       counterexamples=counterexamples, checks=len(pairs) * t_max)


def scnag_sweep(kappas: Sequence[float], h_samples: int, t_max: int,
                alpha: float = 1.0) -> SweepResult:
    """Check every kappa at eta = 1/beta for all t <= t_max.

    Powers are accumulated incrementally, so the verdicts match calling
    ``scnag_lemma_check`` at each t individually.
    """
    max_ratio, witness = -np.inf, {}
    counterexamples: List[dict] = []
    checks = 0
    for kappa in kappas:
        beta = kappa * alpha
        eta = 1.0 / beta
        gamma = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)
        lo, hi = scnag_h_range(alpha, beta, eta)
        hs = np.linspace(lo, hi, h_samples + 2)
        rho = float(_companion_radius((1.0 + gamma) * hs, gamma * hs).max())
        Hs = np.zeros((hs.size, 2, 2))
        Hs[:, 0, 0] = (1.0 + gamma) * hs
        Hs[:, 0, 1] = -gamma * hs
        Hs[:, 1, 0] = 1.0
        Ps = np.broadcast_to(np.eye(2), (hs.size, 2, 2)).copy()
        for t in range(1, t_max + 1):
            Ps = Hs @ Ps
            norm = float(_batch_spectral_norm(Ps).max())
            bound = 2.0 * (1 + t) * rho ** (t - 1)
            checks += 1
            ratio = norm / bound if bound > 0 else (0.0 if norm <= TOL else np.inf)
            if ratio > max_ratio:
                max_ratio = float(ratio)
                witness = {"kappa": kappa, "t": t}
            if norm > bound + TOL:
                counterexamples.append({"kappa": kappa, "t": t, "norm": norm,
                                        "bound": bound})
    return SweepResult(lemma="nag_sc", max_ratio=max_ratio, witness=witness,
                       counterexamples=counterexamples, checks=checks)


def recursion_u_sweep(h_step: float, t_max: int) -> SweepResult:
    """Unroll the scalar recursion on an h grid and confirm |a_i| <= i + 1."""
    hs = np.arange(0.0, 1.0 + h_step / 2, h_step)
    max_ratio, witness = -np.inf, {}
    counterexamples: List[dict] = []
    for h in hs:
        try:
            a = recursion_u(float(h), t_max)
        except RuntimeError:
            counterexamples.append({"h": float(h)})
            continue
        ratios = np.abs(a) / (np.arange(t_max + 1) + 1.0)
        i = int(np.argmax(ratios))
        if ratios[i] > max_ratio:
            max_ratio = float(ratios[i])
            witness = {"h": float(h), "i": i}
    return SweepResult(lemma="recursion_u", max_ratio=max_ratio, witness=witness,
                       counterexamples=counterexamples, checks=hs.size * (t_max + 1))


def adversarial_max(lemma: str, budget: int, seed: int = 0,
                    t_max: int = 64) -> SweepResult:
    """Random search for envelope violations within a lemma's hypothesis box.

    Returns the worst observed norm/bound ratio with witness parameters; any
    ratio above 1 + 1e-9 is recorded as a counterexample.
    """
    if budget < 1:
        raise ValidationError("budget must be >= 1")
    if lemma == "nag_convex":
        return nag_sweep(budget, t_max, seed=seed)
    rng = np.random.Generator(np.random.Philox(seed))
    max_ratio, witness = -np.inf, {}
    counterexamples: List[dict] = []
    if lemma == "hb":
        for _ in range(budget):
            g = rng.uniform(0.0, 0.999)
            a = rng.uniform(0.0, 1.0 - g)
            t = int(rng.integers(1, t_max + 1))
            res = hb_lemma_check(g, a, t)
            ratio = res.norm / res.bound
            if ratio > max_ratio:
                max_ratio, witness = float(ratio), {"gamma": g, "a": a, "t": t}
            if not res.ok:
                counterexamples.append({"gamma": g, "a": a, "t": t, "ratio": ratio})
        return SweepResult(lemma, max_ratio, witness, counterexamples, budget)
    if lemma == "nag_sc":
        for _ in range(budget):
            kappa = float(np.exp(rng.uniform(0.0, np.log(100.0))))
            t = int(rng.integers(1, t_max + 1))
            res = scnag_lemma_check(kappa, 1.0, kappa, 1.0 / kappa, t, h_samples=16)
            ratio = res.norm / res.bound if res.bound > 0 else (
                0.0 if res.norm <= TOL else np.inf)
            if ratio > max_ratio:
                max_ratio, witness = float(ratio), {"kappa": kappa, "t": t}
            if not res.ok:
                counterexamples.append({"kappa": kappa, "t": t, "ratio": ratio})
        return SweepResult(lemma, max_ratio, witness, counterexamples, budget)
    if lemma == "recursion_u":
        for _ in range(budget):
            h = float(rng.uniform(0.0, 1.0))
            t = int(rng.integers(1, t_max + 1))
            try:
                a = recursion_u(h, t)
            except RuntimeError:
                counterexamples.append({"h": h, "t": t})
                continue
            ratios = np.abs(a) / (np.arange(t + 1) + 1.0)
            i = int(np.argmax(ratios))
            if ratios[i] > max_ratio:
                max_ratio, witness = float(ratios[i]), {"h": h, "i": i}
        return SweepResult(lemma, max_ratio, witness, counterexamples, budget)
    raise ValidationError(f"unknown lemma {lemma!r}")
