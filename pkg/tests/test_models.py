import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bgpolymer.lattice import Environment, forward_dp
from bgpolymer.meldist import sample
from bgpolymer.models import (
    ModelError,
    ModelKind,
    ModelSpec,
    bulk_pair,
    characteristic_direction,
    downright_step,
    expected_log_z,
    lln_constant,
    log_moment_product_sum,
    off_characteristic_direction,
    resolve,
    sample_bulk,
)
from bgpolymer.specfun import DomainError, polygamma

from conftest import REFERENCE


def random_spec(kind: str, rng) -> ModelSpec:
    while True:
        mu, theta, beta = np.exp(rng.uniform(math.log(0.1), math.log(10.0), 3))
        if kind in ("ig", "ib") and not mu > theta:
            continue
        return ModelSpec(kind, mu, theta, beta)


@st.composite
def specs(draw):
    kind = draw(st.sampled_from(["ig", "g", "b", "ib"]))
    mu = draw(st.floats(0.1, 10))
    theta = draw(st.floats(0.1, 10))
    beta = draw(st.floats(0.1, 10))
    if kind in ("ig", "ib") and not mu > theta * 1.001:
        mu, theta = max(mu, theta) * 1.01 + 0.01, min(mu, theta)
    return ModelSpec(kind, mu, theta, beta)


class TestSpec:
    def test_ig_requires_mu_above_theta(self):
        with pytest.raises(ModelError, match="mu > theta"):
            ModelSpec("ig", 1.0, 2.0, 1.0)

    def test_ib_requires_mu_above_theta(self):
        with pytest.raises(ModelError, match="mu > theta"):
            ModelSpec("ib", 1.0, 1.0, 1.0)

    def test_g_allows_theta_above_mu(self):
        ModelSpec("g", 1.0, 3.0, 1.0)

    @pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
    def test_positive_finite(self, bad):
        with pytest.raises(ModelError):
            ModelSpec("b", bad, 0.5, 1.0)

    def test_numpy_scalars_accepted(self):
        s = ModelSpec("g", np.float64(1.0), np.int64(2), 1)
        assert s.theta == 2.0

    def test_unknown_kind(self):
        with pytest.raises(ModelError):
            ModelKind.parse("xyz")


class TestResolve:
    def test_ig(self):
        p = resolve(ModelSpec("ig", 2, 1, 1))
        assert (p.a1, p.a2, p.a3) == (-1.0, -1.0, -2.0)
        assert p.f1.kind.name == p.f2.kind.name == "EXP_DECAY_INV"

    def test_g(self):
        p = resolve(ModelSpec("g", 1, 0.5, 1))
        assert (p.a1, p.a2, p.a3) == (1.5, -0.5, 1.0)
        assert (p.f1.kind.name, p.f2.kind.name) == ("EXP_DECAY", "BETA_KERNEL_INV")

    def test_b(self):
        p = resolve(ModelSpec("b", 1, 0.5, 2))
        assert (p.f1.kind.name, p.f1.b, p.f2.kind.name, p.f2.b) == ("BETA_KERNEL", 2.0, "BETA_KERNEL_INV", 1.0)

    def test_ib(self):
        p = resolve(ModelSpec("ib", 2, 0.5, 1))
        assert (p.a1, p.a2, p.a3) == (-1.5, -0.5, -2.0)
        assert (p.f1.kind.name, p.f2.kind.name, p.f2.b) == ("BETA_KERNEL_INV", "SHIFTED_INV_BETA", 3.0)

    def test_perturbation_shifts_boundary_only(self):
        p0 = resolve(REFERENCE["g"])
        p = resolve(REFERENCE["g"], 0.2)
        assert (p.a1, p.a2, p.a3) == pytest.approx((p0.a1 + 0.2, p0.a2 - 0.2, p0.a3))

    def test_perturbation_out_of_domain(self):
        with pytest.raises(ModelError):
            resolve(REFERENCE["ig"], 1.5)

    @given(specs(), st.floats(-0.05, 0.05))
    def test_property_sum_rule_and_domains(self, spec, lam):
        try:
            p = resolve(spec, lam)
        except ModelError:
            return
        assert p.a1 + p.a2 == pytest.approx(p.a3, abs=1e-12)
        assert p.f1.in_domain(p.a1) and p.f2.in_domain(p.a2) and p.f1.in_domain(p.a3)
        assert p.psi1(1) > 0 and p.psi2(1) > 0

    def test_sum_rule_at_zero(self):
        rng = np.random.default_rng(0)
        for kind in ("ig", "g", "b", "ib"):
            for _ in range(200):
                p = resolve(random_spec(kind, rng))
                assert p.a1 + p.a2 == pytest.approx(p.a3, rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("kind", ["ig", "g", "b", "ib"])
def test_log_moment_product_sum_positive(kind):
    rng = np.random.default_rng(42)
    for _ in range(1000):
        assert log_moment_product_sum(random_spec(kind, rng)) > 0


class TestBulkPair:
    def test_beta(self):
        assert bulk_pair(ModelSpec("b", 1, 0.5, 1), 0.3) == pytest.approx((0.3, 0.7))

    def test_gamma(self):
        assert bulk_pair(ModelSpec("g", 1, 0.5, 1), 2.5) == (2.5, 1.0)

    def test_ig(self):
        assert bulk_pair(REFERENCE["ig"], 0.7) == (0.7, 0.7)

    def test_ib_boundary_of_support(self):
        with pytest.raises(DomainError):
            bulk_pair(REFERENCE["ib"], 1.0)

    def test_beta_support(self):
        with pytest.raises(DomainError):
            bulk_pair(REFERENCE["b"], 1.2)

    def test_vectorized(self):
        y1, y2 = bulk_pair(REFERENCE["ib"], np.array([1.5, 3.0]))
        np.testing.assert_allclose(y2, [0.5, 2.0])


class TestDownrightStep:
    def test_arithmetic(self):
        # R1 below the corner, R2 to its left: (Y1 + Y2 R1/R2, Y1 R2/R1 + Y2)
        assert downright_step(2.0, 1.0, 1.0, 3.0) == pytest.approx((7.0, 3.5))

    def test_equal_ratios(self):
        assert downright_step(1.7, 1.7, 0.4, 2.0) == pytest.approx((2.4, 2.4))

    @given(st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100), st.floats(0.01, 100))
    def test_matches_unit_square(self, r1, r2, y1, y2):
        env = Environment(1, 1, [math.log(r1)], [math.log(r2)], [[math.log(y1)]], [[math.log(y2)]])
        F = forward_dp(env).forward
        n1, n2 = downright_step(r1, r2, y1, y2)
        # new horizontal ratio Z11/Z01, new vertical ratio Z11/Z10
        assert math.log(n1) == pytest.approx(F[1, 1] - F[0, 1], rel=1e-12, abs=1e-12)
        assert math.log(n2) == pytest.approx(F[1, 1] - F[1, 0], rel=1e-12, abs=1e-12)


def _inv(dist):
    return lambda x: dist.sf(1.0 / np.asarray(x))


class TestBoundaryLaws:
    """Laws of R1, R2 and the bulk pair against scipy's own distributions."""

    N = 10**5

    def _check(self, x, cdf):
        assert stats.kstest(x, cdf).pvalue > 1e-3

    def test_ig(self):
        mu, th, be = 2.5, 1.0, 1.5
        s = ModelSpec("ig", mu, th, be)
        p = resolve(s)
        rng = np.random.default_rng(1)
        self._check(1 / sample(p.r1_law, rng, self.N), stats.gamma(mu - th, scale=1 / be).cdf)
        self._check(1 / sample(p.r2_law, rng, self.N), stats.gamma(th, scale=1 / be).cdf)
        y1, y2 = sample_bulk(s, rng, self.N)
        self._check(1 / y1, stats.gamma(mu, scale=1 / be).cdf)
        assert np.array_equal(y1, y2)

    def test_g(self):
        mu, th, be = 1.3, 0.7, 2.0
        s = ModelSpec("g", mu, th, be)
        p = resolve(s)
        rng = np.random.default_rng(2)
        self._check(sample(p.r1_law, rng, self.N), stats.gamma(mu + th, scale=1 / be).cdf)
        self._check(sample(p.r2_law, rng, self.N), _inv(stats.beta(th, mu)))
        y1, y2 = sample_bulk(s, rng, self.N)
        self._check(y1, stats.gamma(mu, scale=1 / be).cdf)
        assert np.all(y2 == 1.0)

    def test_b(self):
        mu, th, be = 1.3, 0.7, 2.0
        s = ModelSpec("b", mu, th, be)
        p = resolve(s)
        rng = np.random.default_rng(3)
        self._check(sample(p.r1_law, rng, self.N), stats.beta(mu + th, be).cdf)
        self._check(sample(p.r2_law, rng, self.N), _inv(stats.beta(th, mu)))
        y1, y2 = sample_bulk(s, rng, self.N)
        self._check(y1, stats.beta(mu, be).cdf)
        np.testing.assert_allclose(y1 + y2, 1.0, rtol=1e-15)

    def test_ib(self):
        mu, th, be = 2.2, 0.6, 1.4
        s = ModelSpec("ib", mu, th, be)
        p = resolve(s)
        rng = np.random.default_rng(4)
        self._check(sample(p.r1_law, rng, self.N), _inv(stats.beta(mu - th, be)))
        inv_b = _inv(stats.beta(th, be + mu - th))
        self._check(sample(p.r2_law, rng, self.N), lambda x: inv_b(np.asarray(x) + 1.0))
        y1, y2 = sample_bulk(s, rng, self.N)
        self._check(y1, _inv(stats.beta(mu, be)))
        np.testing.assert_allclose(y1 - y2, 1.0, rtol=1e-12)

    @pytest.mark.parametrize("kind", ["ig", "g", "b", "ib"])
    def test_bulk_sampler_matches_bulk_law(self, kind):
        s = REFERENCE[kind]
        p = resolve(s)
        rng = np.random.default_rng(5)
        y1, _ = sample_bulk(s, rng, self.N)
        x = sample(p.bulk_law, rng, self.N)
        assert stats.ks_2samp(y1, x).pvalue > 1e-3


class TestDirections:
    def test_zero(self):
        assert characteristic_direction(REFERENCE["g"], 0) == (0, 0)

    def test_ig_100(self):
        assert characteristic_direction(REFERENCE["ig"], 100) == (164, 164)

    def test_g_200(self):
        # Var[log R2] = Psi1(theta) - Psi1(theta + mu), Var[log R1] = Psi1(mu + theta)
        # Psi1(1/2) - Psi1(3/2) = 4 exactly
        assert polygamma(1, 0.5) - polygamma(1, 1.5) == pytest.approx(4.0, rel=1e-14)
        n = math.floor(200 * polygamma(1, 1.5))
        assert characteristic_direction(REFERENCE["g"], 200) == (800, n) == (800, 186)

    def test_negative_N(self):
        with pytest.raises(ValueError):
            characteristic_direction(REFERENCE["g"], -1)

    @given(specs(), st.integers(1, 5000))
    def test_property_within_gamma_band(self, spec, N):
        p = resolve(spec)
        m, n = characteristic_direction(spec, N)
        assert abs(m - N * p.psi2(1)) <= N ** (2 / 3)
        assert abs(n - N * p.psi1(1)) <= N ** (2 / 3)

    def test_off_characteristic(self):
        m0, n0 = characteristic_direction(REFERENCE["g"], 256)
        m, n = off_characteristic_direction(REFERENCE["g"], 256, 1.0, 0.5)
        assert n == n0 and m == math.floor(256 * 4.0 + 128)


class TestFormulas:
    def test_expected_log_z_ig(self):
        assert expected_log_z(REFERENCE["ig"], 164, 164) == pytest.approx(328 * 0.5772156649015329, rel=1e-13)

    def test_lln_constant_ig(self):
        g = 0.5772156649015329
        assert lln_constant(REFERENCE["ig"]) == pytest.approx(2 * g * math.pi**2 / 6, rel=1e-13)
