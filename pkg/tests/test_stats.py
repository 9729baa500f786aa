import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bgpolymer.stats import bootstrap_slope, diff_se, mean_se, ols_slope, var_se


def test_mean_se_small():
    assert mean_se([2.0, 4.0]) == pytest.approx((3.0, 1.0))
    m, se = mean_se([5.0])
    assert m == 5.0 and math.isnan(se)


def test_var_se_degenerate():
    assert all(math.isnan(v) for v in var_se([1.0]))
    s2, se = var_se([1.0, 2.0, 4.0])
    assert s2 == pytest.approx(7 / 3) and math.isnan(se)


def test_var_se_matches_replication():
    # the reported error should match the spread of the estimator across repeats
    rng = np.random.default_rng(0)
    draws = rng.standard_exponential((4000, 400))
    est = draws.var(axis=1, ddof=1)
    reported = np.median([var_se(row)[1] for row in draws[:200]])
    assert reported == pytest.approx(est.std(), rel=0.1)


def test_diff_se():
    assert diff_se([1.0, 3.0]) == pytest.approx(1.0)
    assert math.isnan(diff_se([1.0]))


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_ols_exact_line(a, b):
    x = np.linspace(0, 3, 7)
    assert ols_slope(x, a * x + b) == pytest.approx(a, abs=1e-9)


def test_bootstrap_covers_truth():
    rng = np.random.default_rng(1)
    Ns = np.array([16, 64, 256])
    samples = [rng.normal(0, N ** (1 / 3), 2000) for N in Ns]  # Var ~ N^(2/3)
    lo, hi, sd = bootstrap_slope(np.log(Ns), samples, lambda a: a.var(axis=-1, ddof=1), rng, 500)
    assert lo < 2 / 3 < hi and 0 < sd < 0.05


def test_bootstrap_drops_nonpositive_rounds():
    rng = np.random.default_rng(2)
    samples = [np.r_[np.zeros(9), 1.0], np.ones(10), 2 * np.ones(10)]
    with np.errstate(all="raise"):
        lo, hi, _ = bootstrap_slope(np.log([1, 2, 4]), samples, lambda a: a.mean(axis=-1), rng, 200)
    assert math.isfinite(lo) and lo <= hi
