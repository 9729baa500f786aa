"""The four stationary beta-gamma polymer models and their Mellin parameters.

Each model is fixed by (mu, theta, beta). `resolve` maps it to the pair of
base functions (f1, f2) and exponents (a1, a2, a3): the horizontal boundary
weight is m_{f1}(a1), the vertical one m_{f2}(a2), and the bulk variable X is
m_{f1}(a3), from which the bulk pair (Y1, Y2) is built.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .meldist import MellinLaw
from .specfun import DomainError, MellinFamily, psi_f

__all__ = [
    "ModelKind",
    "ModelSpec",
    "ModelParams",
    "ModelError",
    "resolve",
    "bulk_pair",
    "sample_bulk",
    "downright_step",
    "characteristic_direction",
    "off_characteristic_direction",
    "expected_log_z",
    "lln_constant",
    "log_moment_product_sum",
]


class ModelError(ValueError):
    """Invalid model parameters or perturbation."""


class ModelKind(Enum):
    IG = "ig"  # inverse-gamma (log-gamma polymer)
    G = "g"  # gamma (strict-weak)
    B = "b"  # beta
    IB = "ib"  # inverse-beta

    @classmethod
    def parse(cls, s: "str | ModelKind") -> "ModelKind":
        if isinstance(s, cls):
            return s
        try:
            return cls(str(s).strip().lower())
        except ValueError:
            raise ModelError(f"unknown model {s!r}; expected one of ig, g, b, ib") from None


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    mu: float
    theta: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        for name in ("mu", "theta", "beta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not (isinstance(v, numbers.Real) and math.isfinite(v) and v > 0):
                raise ModelError(f"{name} must be a positive finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.kind in (ModelKind.IG, ModelKind.IB) and not self.mu > self.theta:
            raise ModelError(
                f"model {self.kind.name} requires mu > theta > 0 (got mu={self.mu}, theta={self.theta})"
            )

    @property
    def label(self) -> str:
        return f"{self.kind.value}(mu={self.mu:g},theta={self.theta:g},beta={self.beta:g})"


@dataclass(frozen=True)
class ModelParams:
    f1: MellinFamily
    f2: MellinFamily
    a1: float
    a2: float
    a3: float

    @property
    def r1_law(self) -> MellinLaw:
        return MellinLaw(self.f1, self.a1)

    @property
    def r2_law(self) -> MellinLaw:
        return MellinLaw(self.f2, self.a2)

    @property
    def bulk_law(self) -> MellinLaw:
        return MellinLaw(self.f1, self.a3)

    def psi1(self, n: int) -> float:
        return psi_f(self.f1, n, self.a1)

    def psi2(self, n: int) -> float:
        return psi_f(self.f2, n, self.a2)


def resolve(spec: ModelSpec, lam: float = 0.0) -> ModelParams:
    """Mellin functions and exponents of a model, with the boundary exponents
    shifted to (a1 + lam, a2 - lam); the bulk exponent a3 is unchanged."""
    mu, th, be = spec.mu, spec.theta, spec.beta
    k = spec.kind
    if k is ModelKind.IG:
        f1 = f2 = MellinFamily.exp_decay_inv(be)
        a = (th - mu, -th, -mu)
    elif k is ModelKind.G:
        f1, f2 = MellinFamily.exp_decay(be), MellinFamily.beta_kernel_inv(mu)
        a = (mu + th, -th, mu)
    elif k is ModelKind.B:
        f1, f2 = MellinFamily.beta_kernel(be), MellinFamily.beta_kernel_inv(mu)
        a = (mu + th, -th, mu)
    else:
        f1, f2 = MellinFamily.beta_kernel_inv(be), MellinFamily.shifted_inv_beta(be + mu)
        a = (th - mu, -th, -mu)
    a1, a2, a3 = a[0] + lam, a[1] - lam, a[2]
    if not f1.in_domain(a1) or not f2.in_domain(a2):
        raise ModelError(f"perturbation lambda={lam} moves boundary exponents outside their domains")
    return ModelParams(f1, f2, a1, a2, a3)


def bulk_pair(spec: ModelSpec, x):
    """(Y1, Y2) from a bulk sample X: IG (x, x), G (x, 1), B (x, 1-x), IB (x, x-1)."""
    x = np.asarray(x, dtype=float)
    k = spec.kind
    if k is ModelKind.IG:
        ok = x > 0
        y = (x, x)
    elif k is ModelKind.G:
        ok = x > 0
        y = (x, np.ones_like(x))
    elif k is ModelKind.B:
        ok = (x > 0) & (x < 1)
        y = (x, 1.0 - x)
    else:
        ok = x > 1
        y = (x, x - 1.0)
    if not np.all(ok):
        raise DomainError(f"bulk sample outside the support of model {k.name}")
    if x.ndim == 0:
        return float(y[0]), float(y[1])
    return y


def sample_bulk(spec: ModelSpec, rng: np.random.Generator, size):
    """Draw bulk pairs directly from gamma variates.

    Same law as bulk_pair(spec, X) with X ~ m_{f1}(a3), but the complements
    1 - X (B) and X - 1 (IB) are formed as gamma ratios, so they keep full
    relative precision.
    """
    mu, be = spec.mu, spec.beta
    k = spec.kind
    if k is ModelKind.IG:
        x = be / rng.standard_gamma(mu, size=size)
        return x, x
    if k is ModelKind.G:
        return rng.standard_gamma(mu, size=size) / be, np.ones(size)
    g1 = rng.standard_gamma(mu, size=size)
    g2 = rng.standard_gamma(be, size=size)
    if k is ModelKind.B:
        s = g1 + g2
        return g1 / s, g2 / s
    y2 = g2 / g1
    return 1.0 + y2, y2


def downright_step(r1, r2, y1, y2):
    """One corner flip: (Y1 + Y2 R1/R2, Y1 R2/R1 + Y2).

    R1 is the horizontal ratio below the corner, R2 the vertical ratio to its left.
    """
    q = np.asarray(r1, dtype=float) / np.asarray(r2, dtype=float)
    out1 = y1 + y2 * q
    out2 = y1 / q + y2
    if np.ndim(out1) == 0:
        return float(out1), float(out2)
    return out1, out2


def _floor(x: float) -> int:
    # absorb rounding so that e.g. 200 * 4.000...(-ulp) lands on 800
    return int(math.floor(x + 1e-9 * max(1.0, abs(x))))


def characteristic_direction(spec: ModelSpec, N: int, lam: float = 0.0) -> tuple[int, int]:
    """(floor(N Var[log R2]), floor(N Var[log R1]))."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N == 0:
        return (0, 0)
    p = resolve(spec, lam)
    return (_floor(N * p.psi2(1)), _floor(N * p.psi1(1)))


def off_characteristic_direction(spec: ModelSpec, N: int, alpha: float, c1: float) -> tuple[int, int]:
    """Horizontal overshoot of c1 N^alpha beyond the characteristic point."""
    p = resolve(spec)
    return (_floor(N * p.psi2(1) + c1 * N**alpha), _floor(N * p.psi1(1)))


def expected_log_z(spec: ModelSpec, m: int, n: int, lam: float = 0.0) -> float:
    p = resolve(spec, lam)
    return m * p.psi1(0) + n * p.psi2(0)


def lln_constant(spec: ModelSpec) -> float:
    """Almost-sure limit of log Z / N along the characteristic direction."""
    p = resolve(spec)
    return p.psi1(0) * p.psi2(1) + p.psi2(0) * p.psi1(1)


def log_moment_product_sum(spec: ModelSpec) -> float:
    """psi_1^{f1}(a1) psi_2^{f2}(a2) + psi_1^{f2}(a2) psi_2^{f1}(a1), positive for all four models."""
    p = resolve(spec)
    return p.psi1(1) * p.psi2(2) + p.psi2(1) * p.psi1(2)
