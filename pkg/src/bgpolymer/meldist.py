"""Mellin-type laws m_f(a): density, CDF, quantile, sampling and the L kernel.

A law m_f(a) has density x^(a-1) f(x) / M_f(a) on (0, inf). CDFs and quantiles
reduce to regularized incomplete gamma/beta functions; the L kernel is
computed by adaptive quadrature in the variable u = log x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy import special as sp

from .specfun import DomainError, Kind, MellinFamily, log_mellin, psi_f

__all__ = [
    "MellinLaw",
    "density",
    "log_density",
    "cdf",
    "quantile",
    "sample",
    "l_kernel",
    "l_kernel_many",
    "l_growth_bound",
]

QUAD_EPSABS = 1e-9
QUANTILE_PTOL = 1e-12


@dataclass(frozen=True)
class MellinLaw:
    family: MellinFamily
    a: float

    def __post_init__(self):
        self.family.check_domain(self.a)

    @property
    def log_norm(self) -> float:
        return log_mellin(self.family, self.a)

    @property
    def mean_log(self) -> float:
        return psi_f(self.family, 0, self.a)

    @property
    def var_log(self) -> float:
        return psi_f(self.family, 1, self.a)

    def mirror(self) -> "MellinLaw":
        """Law of 1/X."""
        return MellinLaw(self.family.mirror(), -self.a)

    # log-density of U = log X, used by the quadratures
    def _log_g(self, u: float) -> float:
        f = self.family
        b, a = f.b, self.a
        k = f.kind
        if k is Kind.EXP_DECAY:
            lf = -b * math.exp(u) if u < 700 else -math.inf
        elif k is Kind.EXP_DECAY_INV:
            lf = -b * math.exp(-u) if u > -700 else -math.inf
        elif k is Kind.BETA_KERNEL:
            if u >= 0:
                return -math.inf
            lf = (b - 1.0) * math.log(-math.expm1(u))
        elif k is Kind.BETA_KERNEL_INV:
            if u <= 0:
                return -math.inf
            lf = (b - 1.0) * math.log(-math.expm1(-u))
        else:
            # -b log(1 + e^{-u}), written to stay finite for large |u|
            lf = -b * (math.log1p(math.exp(-u)) if u > -30 else -u + math.exp(u))
        return a * u + lf - self.log_norm

    def _u_support(self) -> tuple[float, float]:
        lo, hi = self.family.support
        return (math.log(lo) if lo > 0 else -math.inf, math.log(hi) if math.isfinite(hi) else math.inf)


def log_density(law: MellinLaw, x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (law.a - 1.0) * np.log(x) + law.family.log_f(x) - law.log_norm
    out = np.where(x > 0, out, -np.inf)
    return out if out.ndim else float(out)


def density(law: MellinLaw, x):
    """rho_{f,a}(x); zero outside the support of f."""
    return np.exp(log_density(law, x))


def cdf(law: MellinLaw, x):
    x = np.asarray(x, dtype=float)
    f, a = law.family, law.a
    b = f.b
    k = f.kind
    with np.errstate(divide="ignore", invalid="ignore"):
        xp = np.where(x > 0, x, 1.0)
        if k is Kind.EXP_DECAY:
            out = sp.gammainc(a, b * xp)
        elif k is Kind.EXP_DECAY_INV:
            out = sp.gammaincc(-a, b / xp)
        elif k is Kind.BETA_KERNEL:
            out = np.where(x < 1.0, sp.betainc(a, b, np.minimum(xp, 1.0)), 1.0)
        elif k is Kind.BETA_KERNEL_INV:
            out = np.where(x > 1.0, sp.betaincc(-a, b, 1.0 / np.maximum(xp, 1.0)), 0.0)
        else:
            # complementary form above the midpoint keeps the upper tail monotone
            out = np.where(
                xp <= 1.0,
                sp.betainc(a + b, -a, xp / (1.0 + xp)),
                sp.betaincc(-a, a + b, 1.0 / (1.0 + xp)),
            )
    out = np.where(x > 0, out, 0.0)
    return out if out.ndim else float(out)


def _quantile_closed(law: MellinLaw, p: np.ndarray) -> np.ndarray:
    f, a = law.family, law.a
    b = f.b
    k = f.kind
    if k is Kind.EXP_DECAY:
        if a == 1.0:
            return -np.log1p(-p) / b
        return sp.gammaincinv(a, p) / b
    if k is Kind.EXP_DECAY_INV:
        return b / sp.gammainccinv(-a, p)
    if k is Kind.BETA_KERNEL:
        if a == 1.0 and b == 1.0:
            return p.copy()
        return sp.betaincinv(a, b, p)
    if k is Kind.BETA_KERNEL_INV:
        return 1.0 / sp.betainccinv(-a, b, p)
    w = sp.betaincinv(a + b, -a, p)
    with np.errstate(divide="ignore"):
        return w / (1.0 - w)


def _refine(law: MellinLaw, p: float, x0: float) -> float:
    """Bracketed root-find of cdf(x) = p in log x around a starting point."""
    lo_s, hi_s = law.family.support

    def h(u):
        return cdf(law, math.exp(u)) - p

    u0 = math.log(x0) if np.isfinite(x0) and x0 > 0 else 0.0
    lo, hi = u0 - 0.5, u0 + 0.5
    step = 1.0
    for _ in range(200):
        if h(lo) <= 0:
            break
        lo -= step
        step *= 2
    step = 1.0
    for _ in range(200):
        if h(hi) >= 0:
            break
        hi += step
        step *= 2
    if lo_s > 0:
        lo = max(lo, math.log(lo_s))
    if math.isfinite(hi_s):
        hi = min(hi, math.log(hi_s))
    u = optimize.brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(u)


def quantile(law: MellinLaw, p):
    """H^f(a, p) = inf{x : p <= F(a, x)} for p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError("quantile requires 0 < p < 1")
    flat = np.atleast_1d(p).ravel()
    x = _quantile_closed(law, flat)
    bad = ~np.isfinite(x) | (np.abs(cdf(law, x) - flat) > QUANTILE_PTOL)
    for idx in np.flatnonzero(bad):
        x[idx] = _refine(law, float(flat[idx]), float(x[idx]))
    out = x.reshape(p.shape)
    return out if out.ndim else float(out)


def _gamma(rng: np.random.Generator, shape: float, size):
    return rng.standard_gamma(shape, size=size)


def sample(law: MellinLaw, rng: np.random.Generator, size=None):
    """Draw from m_f(a) with direct gamma-based samplers.

    Beta laws are gamma ratios; the inverse kinds are reciprocals; the shifted
    inverse beta is Be^{-1}(-a, b+a) - 1 = G(b+a) / G(-a).
    """
    f, a = law.family, law.a
    b = f.b
    k = f.kind
    if k is Kind.EXP_DECAY:
        return _gamma(rng, a, size) / b
    if k is Kind.EXP_DECAY_INV:
        return b / _gamma(rng, -a, size)
    if k is Kind.BETA_KERNEL:
        g1 = _gamma(rng, a, size)
        g2 = _gamma(rng, b, size)
        return g1 / (g1 + g2)
    if k is Kind.BETA_KERNEL_INV:
        g1 = _gamma(rng, -a, size)
        g2 = _gamma(rng, b, size)
        return 1.0 + g2 / g1
    g1 = _gamma(rng, -a, size)
    g2 = _gamma(rng, b + a, size)
    return g2 / g1


def sample_coupled(law: MellinLaw, uniforms):
    """Inverse-CDF realization H^f(a, eta) for given uniforms eta."""
    return quantile(law, uniforms)


# ---------------------------------------------------------------------------
# L kernel


def _median_u(law: MellinLaw) -> float:
    return math.log(quantile(law, 0.5))


def _scale(law: MellinLaw, s: float) -> float:
    """Local decay rate of log g near s, used to rescale the quadrature."""
    h = 1e-4 * max(1.0, abs(s))
    lo_u, hi_u = law._u_support()
    left = max(s - h, lo_u + 0.5 * (s - lo_u)) if math.isfinite(lo_u) else s - h
    right = min(s + h, hi_u - 0.5 * (hi_u - s)) if math.isfinite(hi_u) else s + h
    d = (law._log_g(right) - law._log_g(left)) / (right - left)
    return max(1.0, abs(d))


def _l_lower(law: MellinLaw, s: float) -> float:
    # (1/g(s)) * int_{-inf}^{s} (psi0 - t) g(t) dt, t = s - w/k
    psi0 = law.mean_log
    lg_s = law._log_g(s)
    kappa = _scale(law, s)
    lo_u = law._u_support()[0]
    wmax = (s - lo_u) * kappa if math.isfinite(lo_u) else math.inf

    def integrand(w):
        t = s - w / kappa
        return (psi0 - t) * math.exp(law._log_g(t) - lg_s)

    val, _ = integrate.quad(integrand, 0.0, wmax, epsabs=QUAD_EPSABS, epsrel=1e-11, limit=200)
    return val / kappa


def _l_upper(law: MellinLaw, s: float) -> float:
    # -(1/g(s)) * int_{s}^{inf} (psi0 - t) g(t) dt, t = s + w/k
    psi0 = law.mean_log
    lg_s = law._log_g(s)
    kappa = _scale(law, s)
    hi_u = law._u_support()[1]
    wmax = (hi_u - s) * kappa if math.isfinite(hi_u) else math.inf

    def integrand(w):
        t = s + w / kappa
        return (t - psi0) * math.exp(law._log_g(t) - lg_s)

    val, _ = integrate.quad(integrand, 0.0, wmax, epsabs=QUAD_EPSABS, epsrel=1e-11, limit=200)
    return val / kappa


def _check_support(law: MellinLaw, x: float) -> float:
    lo, hi = law.family.support
    if not (lo < x < hi):
        raise DomainError(f"x={x!r} outside the support ({lo}, {hi}) of {law.family}")
    return math.log(x)


def l_kernel(law: MellinLaw, x: float, form: str = "auto") -> float:
    """L^f(a, x) = -Cov(log X, 1{X <= x}) / (x rho(x)) for X ~ m_f(a).

    ``form`` selects the lower-tail integral ("lower"), the upper-tail
    integral ("upper"), or the better conditioned of the two ("auto": lower
    below the median, upper above it).
    """
    s = _check_support(law, float(x))
    if form == "auto":
        form = "lower" if s <= _median_u(law) else "upper"
    if form == "lower":
        return _l_lower(law, s)
    if form == "upper":
        return _l_upper(law, s)
    raise ValueError(f"unknown form {form!r}")


def l_kernel_many(law: MellinLaw, xs) -> np.ndarray:
    """Vectorised L^f(a, .) for many points.

    Points are sorted on each side of the median; the tail integral is taken
    once for the outermost point and then accumulated over the gaps between
    consecutive points, so each point costs one short quadrature.
    """
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.shape)
    flat = xs.ravel()
    if flat.size == 0:
        return out
    lo, hi = law.family.support
    if np.any((flat <= lo) | (flat >= hi)):
        raise DomainError(f"points outside the support ({lo}, {hi}) of {law.family}")
    us = np.log(flat)
    med = _median_u(law)
    psi0 = law.mean_log
    res = np.empty(flat.size)

    def seg(t0, t1, ref):
        # int_{t0}^{t1} (psi0 - t) exp(log g(t) - ref) dt
        v, _ = integrate.quad(
            lambda t: (psi0 - t) * math.exp(law._log_g(t) - ref),
            t0, t1, epsabs=QUAD_EPSABS * 1e-3, epsrel=1e-12, limit=200,
        )
        return v

    lower = np.flatnonzero(us <= med)
    if lower.size:
        order = lower[np.argsort(us[lower], kind="stable")]
        # carried integral I(u) scaled by exp(-ref) where ref = log g(u_prev)
        s0 = us[order[0]]
        ref = law._log_g(s0)
        acc = _l_lower(law, s0)  # = I(s0) / g(s0)
        res[order[0]] = acc
        prev = s0
        for idx in order[1:]:
            s = us[idx]
            if s == prev:
                res[idx] = acc
                continue
            lg = law._log_g(s)
            # I(s)/g(s) = (I(prev)/g(prev)) * g(prev)/g(s) + int_prev^s ... / g(s)
            acc = acc * math.exp(ref - lg) + seg(prev, s, lg)
            ref, prev = lg, s
            res[idx] = acc
    upper = np.flatnonzero(us > med)
    if upper.size:
        order = upper[np.argsort(-us[upper], kind="stable")]
        s0 = us[order[0]]
        ref = law._log_g(s0)
        acc = _l_upper(law, s0)
        res[order[0]] = acc
        prev = s0
        for idx in order[1:]:
            s = us[idx]
            if s == prev:
                res[idx] = acc
                continue
            lg = law._log_g(s)
            # J(s) = -int_s^inf (psi0 - t) g dt = J(prev) + int_s^prev (t - psi0) g dt
            acc = acc * math.exp(ref - lg) - seg(s, prev, lg)
            ref, prev = lg, s
            res[idx] = acc
    out[...] = res.reshape(xs.shape)
    return out


def l_growth_bound(law: MellinLaw, n_points: int = 200, p_range=(1e-10, 1 - 1e-10)) -> float:
    """Empirical max of L(a, x) / (1 + |log x|) over a log-spaced grid.

    The grid spans the given quantile range of the law; the value is a report,
    not a certified constant.
    """
    x_lo, x_hi = quantile(law, np.array(p_range))
    grid = np.exp(np.linspace(math.log(x_lo), math.log(x_hi), n_points))
    lo, hi = law.family.support
    grid = grid[(grid > lo) & (grid < hi)]
    vals = l_kernel_many(law, grid)
    return float(np.max(vals / (1.0 + np.abs(np.log(grid)))))
