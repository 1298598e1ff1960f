"""Loss families with values, gradients, and certified constants.

Every family evaluates a per-sample loss l(theta; z) together with its
gradient and a set of certified constants (Lipschitz L, smoothness beta,
strong convexity alpha, domain diameter R).  Five families are supported:

* ``logistic``              -- negative log-likelihood of a Bernoulli GLM,
                               l(theta; (x, y)) = log(1 + exp(x.theta)) - y x.theta
* ``quadratic``             -- l(theta; z) = 0.5 theta'A theta - b.theta, sample
                               independent; A symmetric PSD
* ``linear_worstcase``      -- l(theta; s) = s * L * theta[0] on symbols s in {-1,+1}
* ``lecam_convex``          -- piecewise quadratic/linear in theta[0], centered at
                               s*r: (beta/2)u^2 for |u| <= r/2, (beta*r/4)|u| beyond
* ``lecam_strongly_convex`` -- pure quadratic (beta/2)(theta[0] - s*r)^2

All evaluation is pure and re-entrant; specs and datasets are immutable
once constructed and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

SYMBOL_FAMILIES = ("linear_worstcase", "lecam_convex", "lecam_strongly_convex")
LABELED_FAMILIES = ("logistic",)
FAMILIES = ("logistic", "quadratic") + SYMBOL_FAMILIES


class ValidationError(ValueError):
    """A precondition on inputs or configuration was violated."""


def as_param_vector(theta) -> np.ndarray:
    """Coerce to a finite 1-D float array (model parameters)."""
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValidationError(f"parameter vector must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("parameter vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class DataPoint:
    """One sample: either a labeled pair (x, y in {0,1}) or a symbol in {-1,+1}."""

    kind: str  # "labeled" | "symbol"
    x: Optional[np.ndarray] = None
    y: Optional[int] = None
    s: Optional[int] = None

    @staticmethod
    def labeled(x, y: int) -> "DataPoint":
        x = np.asarray(x, dtype=float)
        if int(y) not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {y}")
        return DataPoint(kind="labeled", x=x, y=int(y))

    @staticmethod
    def symbol(s: int) -> "DataPoint":
        if int(s) not in (-1, 1):
            raise ValidationError(f"symbol must be -1 or +1, got {s}")
        return DataPoint(kind="symbol", s=int(s))


@dataclass(frozen=True)
class Dataset:
    """A sample of n points, homogeneous in variant, backed by dense arrays."""

    kind: str  # "labeled" | "symbol"
    X: Optional[np.ndarray] = None  # (n, d) rows for labeled data
    y: Optional[np.ndarray] = None  # (n,) labels in {0, 1}
    s: Optional[np.ndarray] = None  # (n,) symbols in {-1, +1}

    def __post_init__(self):
        if self.kind == "labeled":
            if self.X is None or self.y is None:
                raise ValidationError("labeled dataset needs X and y")
            if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
                raise ValidationError("labeled dataset shapes disagree")
            if self.X.shape[0] < 1:
                raise ValidationError("dataset must contain at least one point")
        elif self.kind == "symbol":
            if self.s is None or np.asarray(self.s).ndim != 1:
                raise ValidationError("symbol dataset needs a 1-D symbol array")
            if len(self.s) < 1:
                raise ValidationError("dataset must contain at least one point")
            if not np.all(np.isin(self.s, (-1, 1))):
                raise ValidationError("symbols must lie in {-1, +1}")
        else:
            raise ValidationError(f"unknown dataset kind {self.kind!r}")

    @staticmethod
    def from_labeled(X, y) -> "Dataset":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        return Dataset(kind="labeled", X=X, y=y)

    @staticmethod
    def from_symbols(s) -> "Dataset":
        return Dataset(kind="symbol", s=np.asarray(s, dtype=float))

    @property
    def n(self) -> int:
        return self.X.shape[0] if self.kind == "labeled" else len(self.s)

    @property
    def dim(self) -> Optional[int]:
        return self.X.shape[1] if self.kind == "labeled" else None

    def point(self, i: int) -> DataPoint:
        if not 0 <= i < self.n:
            raise ValidationError(f"index {i} out of range for n={self.n}")
        if self.kind == "labeled":
            return DataPoint.labeled(self.X[i], int(self.y[i]))
        return DataPoint.symbol(int(self.s[i]))

    def replace(self, k: int, z: DataPoint) -> "Dataset":
        """Copy with position k (0-based) substituted by z."""
        if not 0 <= k < self.n:
            raise ValidationError(f"index {k} out of range for n={self.n}")
        if z.kind != self.kind:
            raise ValidationError(f"variant mismatch: {z.kind} point into {self.kind} set")
        if self.kind == "labeled":
            if z.x.shape != (self.X.shape[1],):
                raise ValidationError("replacement point has wrong dimension")
            X = self.X.copy()
            y = self.y.copy()
            X[k] = z.x
            y[k] = z.y
            return Dataset(kind="labeled", X=X, y=y)
        s = self.s.copy()
        s[k] = z.s
        return Dataset(kind="symbol", s=s)

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if self.kind == "labeled":
            return Dataset(kind="labeled", X=self.X[idx], y=self.y[idx])
        return Dataset(kind="symbol", s=self.s[idx])


@dataclass(frozen=True)
class LossSpec:
    """A loss family plus its parameters and the domain diameter R."""

    family: str
    domain_radius: float = 1.0
    A: Optional[np.ndarray] = None     # quadratic
    b: Optional[np.ndarray] = None     # quadratic
    L: Optional[float] = None          # linear_worstcase
    beta: Optional[float] = None       # lecam families
    r: Optional[float] = None          # lecam families

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown loss family {self.family!r}")
        if self.domain_radius <= 0:
            raise ValidationError("domain_radius must be positive")
        if self.family == "quadratic":
            A = np.asarray(self.A, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise ValidationError("quadratic A must be a square matrix")
            if not np.allclose(A, A.T, atol=1e-10):
                raise ValidationError("quadratic A must be symmetric")
            if np.linalg.eigvalsh(A)[0] < -1e-10:
                raise ValidationError("quadratic A must be positive semi-definite")
            b = np.zeros(A.shape[0]) if self.b is None else np.asarray(self.b, dtype=float)
            if b.shape != (A.shape[0],):
                raise ValidationError("quadratic b has wrong dimension")
            object.__setattr__(self, "A", A)
            object.__setattr__(self, "b", b)
        if self.family == "linear_worstcase" and (self.L is None or self.L <= 0):
            raise ValidationError("linear_worstcase needs L > 0")
        if self.family in ("lecam_convex", "lecam_strongly_convex"):
            if self.beta is None or self.beta <= 0 or self.r is None or self.r <= 0:
                raise ValidationError("lecam families need beta > 0 and r > 0")

    @property
    def variant(self) -> str:
        """Data variant this family consumes."""
        return "labeled" if self.family in LABELED_FAMILIES else "symbol" \
            if self.family in SYMBOL_FAMILIES else "any"


def logistic_spec(domain_radius: float = 1.0) -> LossSpec:
    return LossSpec(family="logistic", domain_radius=domain_radius)


def quadratic_spec(A, b=None, domain_radius: float = 1.0) -> LossSpec:
    return LossSpec(family="quadratic", A=np.asarray(A, dtype=float), b=b,
                    domain_radius=domain_radius)


def linear_worstcase_spec(L: float, domain_radius: float = 1.0) -> LossSpec:
    return LossSpec(family="linear_worstcase", L=L, domain_radius=domain_radius)


def lecam_convex_spec(beta: float, r: float, domain_radius: float = None) -> LossSpec:
    R = 2.0 * r if domain_radius is None else domain_radius
    return LossSpec(family="lecam_convex", beta=beta, r=r, domain_radius=R)


def lecam_strongly_convex_spec(beta: float, r: float, domain_radius: float = None) -> LossSpec:
    R = 2.0 * r if domain_radius is None else domain_radius
    return LossSpec(family="lecam_strongly_convex", beta=beta, r=r, domain_radius=R)


@dataclass(frozen=True)
class LossConstants:
    """Certified constants: L Lipschitz, beta smoothness, alpha strong convexity, R diameter."""

    L: float
    beta: float
    alpha: float
    R: float

    def __post_init__(self):
        if self.L <= 0 or self.R <= 0:
            raise ValidationError("L and R must be positive")
        if self.beta < 0 or self.alpha < 0:
            raise ValidationError("beta and alpha must be nonnegative")
        if self.beta > 0 and self.alpha > self.beta * (1 + 1e-12):
            raise ValidationError("alpha must not exceed beta")
        if self.beta == 0 and self.alpha != 0:
            raise ValidationError("alpha must be 0 when beta is 0")

    @property
    def kappa(self) -> float:
        """Condition number beta/alpha (inf for non-strongly-convex losses)."""
        return self.beta / self.alpha if self.alpha > 0 else float("inf")


def _sigmoid(u):
    # numerically stable logistic function
    out = np.empty_like(u, dtype=float)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _check_point(spec: LossSpec, theta: np.ndarray, z: DataPoint) -> None:
    want = spec.variant
    if want != "any" and z.kind != want:
        raise ValidationError(f"{spec.family} expects {want} points, got {z.kind}")
    if z.kind == "labeled" and z.x.shape != theta.shape:
        raise ValidationError(
            f"dimension mismatch: x has shape {z.x.shape}, theta {theta.shape}")
    if spec.family == "quadratic" and theta.shape != (spec.A.shape[0],):
        raise ValidationError("theta dimension does not match quadratic A")


def _lecam_convex_piece(u: np.ndarray, beta: float, r: float) -> np.ndarray:
    """Piecewise value in the offset u = theta[0] - s*r (vectorized)."""
    au = np.abs(u)
    return np.where(au <= r / 2, 0.5 * beta * u * u, 0.25 * beta * r * au)


def _lecam_convex_slope(u: np.ndarray, beta: float, r: float) -> np.ndarray:
    """One-sided slope; at |u| = r/2 the linear-piece slope is used."""
    au = np.abs(u)
    return np.where(au < r / 2, beta * u, 0.25 * beta * r * np.sign(u))


def loss_value(spec: LossSpec, theta, z: DataPoint) -> float:
    """Per-sample loss l(theta; z)."""
    theta = as_param_vector(theta)
    _check_point(spec, theta, z)
    f = spec.family
    if f == "logistic":
        u = float(z.x @ theta)
        return float(np.logaddexp(0.0, u) - z.y * u)
    if f == "quadratic":
        return float(0.5 * theta @ spec.A @ theta - spec.b @ theta)
    if f == "linear_worstcase":
        return float(z.s * spec.L * theta[0])
    u = np.array([theta[0] - z.s * spec.r])
    if f == "lecam_convex":
        return float(_lecam_convex_piece(u, spec.beta, spec.r)[0])
    return float(0.5 * spec.beta * u[0] ** 2)  # lecam_strongly_convex


def loss_grad(spec: LossSpec, theta, z: DataPoint) -> np.ndarray:
    """Gradient of the per-sample loss with respect to theta."""
    theta = as_param_vector(theta)
    _check_point(spec, theta, z)
    f = spec.family
    if f == "logistic":
        u = np.array([z.x @ theta])
        return (_sigmoid(u)[0] - z.y) * z.x
    if f == "quadratic":
        return spec.A @ theta - spec.b
    g = np.zeros_like(theta)
    if f == "linear_worstcase":
        g[0] = z.s * spec.L
        return g
    u = np.array([theta[0] - z.s * spec.r])
    if f == "lecam_convex":
        g[0] = _lecam_convex_slope(u, spec.beta, spec.r)[0]
    else:
        g[0] = spec.beta * u[0]
    return g


def _check_dataset(spec: LossSpec, theta: np.ndarray, data: Dataset) -> None:
    want = spec.variant
    if want != "any" and data.kind != want:
        raise ValidationError(f"{spec.family} expects {want} data, got {data.kind}")
    if data.kind == "labeled" and data.X.shape[1] != theta.shape[0]:
        raise ValidationError("dimension mismatch between data rows and theta")


def loss_values_matrix(spec: LossSpec, thetas: np.ndarray, data: Dataset) -> np.ndarray:
    """Per-sample losses for a batch of parameter vectors: (k, n) matrix.

    Row i holds l(thetas[i]; z_j) for every point z_j of the dataset.  This
    is the vectorized engine behind empirical risks and sup-loss gaps.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    _check_dataset(spec, thetas[0], data)
    f = spec.family
    if f == "logistic":
        U = thetas @ data.X.T
        return np.logaddexp(0.0, U) - U * data.y[None, :]
    if f == "quadratic":
        v = 0.5 * np.einsum("ki,ij,kj->k", thetas, spec.A, thetas) - thetas @ spec.b
        return np.broadcast_to(v[:, None], (thetas.shape[0], data.n))
    t0 = thetas[:, 0:1]
    if f == "linear_worstcase":
        return spec.L * t0 * data.s[None, :]
    U = t0 - spec.r * data.s[None, :]
    if f == "lecam_convex":
        return _lecam_convex_piece(U, spec.beta, spec.r)
    return 0.5 * spec.beta * U * U


def empirical_risk(spec: LossSpec, theta, data: Dataset) -> float:
    """Average loss over the sample: R_S(theta) = (1/n) sum_i l(theta; z_i)."""
    theta = as_param_vector(theta)
    return float(loss_values_matrix(spec, theta[None, :], data).mean(axis=1)[0])


def empirical_risk_batch(spec: LossSpec, thetas: np.ndarray, data: Dataset) -> np.ndarray:
    """Empirical risk for each row of a (k, d) batch of parameter vectors."""
    return loss_values_matrix(spec, thetas, data).mean(axis=1)


def empirical_risk_grad(spec: LossSpec, theta, data: Dataset) -> np.ndarray:
    """Gradient of the empirical risk at theta."""
    theta = as_param_vector(theta)
    _check_dataset(spec, theta, data)
    f = spec.family
    if f == "logistic":
        resid = _sigmoid(data.X @ theta) - data.y
        return data.X.T @ resid / data.n
    if f == "quadratic":
        return spec.A @ theta - spec.b
    g = np.zeros_like(theta)
    if f == "linear_worstcase":
        g[0] = spec.L * data.s.mean()
        return g
    u = theta[0] - spec.r * data.s
    if f == "lecam_convex":
        g[0] = _lecam_convex_slope(u, spec.beta, spec.r).mean()
    else:
        g[0] = spec.beta * u.mean()
    return g


def sample_grad(spec: LossSpec, theta: np.ndarray, data: Dataset, i: int) -> np.ndarray:
    """Gradient of the i-th per-sample loss (fast path for stochastic methods)."""
    f = spec.family
    if f == "logistic":
        x = data.X[i]
        u = np.array([x @ theta])
        return (_sigmoid(u)[0] - data.y[i]) * x
    if f == "quadratic":
        return spec.A @ theta - spec.b
    g = np.zeros_like(theta)
    s = data.s[i]
    if f == "linear_worstcase":
        g[0] = s * spec.L
        return g
    u = np.array([theta[0] - s * spec.r])
    if f == "lecam_convex":
        g[0] = _lecam_convex_slope(u, spec.beta, spec.r)[0]
    else:
        g[0] = spec.beta * u[0]
    return g


def loss_constants(spec: LossSpec, data: Optional[Dataset] = None) -> LossConstants:
    """Certified constants for a family.

    For the logistic family the constants L = 1 and beta = 1/4 are certified
    only for unit-norm design rows; pass the dataset to have that precondition
    checked (rows exceeding norm 1 raise ``ValidationError``).

    For ``linear_worstcase`` the smoothness constant is identically zero and
    is reported as such; step-size rules that divide by beta treat it as
    unconstrained.
    """
    R = spec.domain_radius
    f = spec.family
    if f == "logistic":
        if data is not None:
            if data.kind != "labeled":
                raise ValidationError("logistic constants need labeled data")
            norms = np.linalg.norm(data.X, axis=1)
            if norms.max() > 1.0 + 1e-9:
                raise ValidationError(
                    "logistic design must have unit-norm rows; run normalize_rows first")
        return LossConstants(L=1.0, beta=0.25, alpha=0.0, R=R)
    if f == "quadratic":
        eig = np.linalg.eigvalsh(spec.A)
        beta = float(eig[-1])
        alpha = float(max(eig[0], 0.0))
        return LossConstants(L=beta * R, beta=beta, alpha=alpha, R=R)
    if f == "linear_worstcase":
        return LossConstants(L=spec.L, beta=0.0, alpha=0.0, R=R)
    if f == "lecam_convex":
        # gradient magnitude peaks at the quadratic-piece boundary |u| = r/2
        return LossConstants(L=0.5 * spec.beta * spec.r, beta=spec.beta, alpha=0.0, R=R)
    # lecam_strongly_convex: |grad| = beta*|theta[0] - s*r| <= beta*(R/2 + r)
    return LossConstants(L=spec.beta * (R / 2 + spec.r), beta=spec.beta,
                         alpha=spec.beta, R=R)


def normalize_rows(X) -> np.ndarray:
    """Rescale every row of X to unit Euclidean norm."""
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValidationError("cannot normalize a zero row")
    return X / norms


def lecam_convex_kinks(spec: LossSpec, s: int) -> tuple:
    """theta[0] locations where the piecewise family switches pieces."""
    c = s * spec.r
    return (c - spec.r / 2, c + spec.r / 2)
