import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from robust_trace.shrinkage import (RateFormula, ShrinkageKind, ShrinkageRule, shrink_norm,
                                    shrink_rows, threshold_from_rule, truncate_elementwise,
                                    truncate_scalar)

from oracles import clip_scalar, naive_shrink

CASES = settings(max_examples=500, deadline=None)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
taus = st.floats(1e-3, 1e3, allow_nan=False)
vectors = arrays(np.float64, st.integers(1, 8), elements=finite)
orders = st.sampled_from([2, 4])


# --- examples --------------------------------------------------------------

@pytest.mark.parametrize("y, tau, expected", [(5.0, 3.0, 3.0), (-5.0, 3.0, -3.0), (2.0, 3.0, 2.0)])
def test_truncate_scalar_examples(y, tau, expected):
    assert truncate_scalar(y, tau) == expected


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan])
def test_truncate_scalar_rejects_bad_threshold(bad):
    with pytest.raises(ValueError):
        truncate_scalar(1.0, bad)


@pytest.mark.parametrize("y", [math.inf, -math.inf, math.nan])
def test_truncate_scalar_rejects_nonfinite_value(y):
    with pytest.raises(ValueError):
        truncate_scalar(y, 1.0)


def test_truncate_scalar_infinite_threshold_is_identity():
    assert truncate_scalar(-7.5, math.inf) == -7.5


@pytest.mark.parametrize("x, tau, expected", [
    ((4, -1, 0.5), 2, (2, -1, 0.5)),
    ((0, 0, 0), 1, (0, 0, 0)),
    ((-3, 3), 3, (-3, 3)),
])
def test_truncate_elementwise_examples(x, tau, expected):
    np.testing.assert_array_equal(truncate_elementwise(x, tau), expected)


def test_truncate_elementwise_errors():
    with pytest.raises(ValueError):
        truncate_elementwise([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        truncate_elementwise([1.0, np.inf], 1.0)


def test_shrink_norm_examples():
    np.testing.assert_array_equal(shrink_norm([1, 0, 0], 2, order=4), [1, 0, 0])
    np.testing.assert_allclose(shrink_norm([2, 0], 1, order=4), [1, 0])
    # oracle: compute the l4 norm by hand and rescale
    norm4 = (1 ** 4 + 1 ** 4) ** 0.25
    expected = np.array([1.0, 1.0]) / norm4
    np.testing.assert_allclose(shrink_norm([1, 1], 1, order=4), expected, rtol=1e-14)
    np.testing.assert_allclose(expected, [0.8409, 0.8409], atol=1e-4)


def test_shrink_norm_zero_and_errors():
    np.testing.assert_array_equal(shrink_norm(np.zeros(3), 0.5, order=2), np.zeros(3))
    with pytest.raises(ValueError):
        shrink_norm([1.0], -1.0)
    with pytest.raises(ValueError):
        shrink_norm([1.0], 1.0, order=3)


def test_shrink_norm_returns_copy():
    x = np.array([0.1, 0.2])
    out = shrink_norm(x, 10.0)
    out[0] = 5.0
    assert x[0] == 0.1


def test_threshold_examples():
    rule = ShrinkageRule(ShrinkageKind.SCALAR_TRUNCATE, RateFormula.SQRT_N_OVER_LOG_D, 1.0)
    assert threshold_from_rule(rule, 100, 4605) == pytest.approx(
        math.sqrt(4605 / math.log(100)), rel=1e-14)
    assert threshold_from_rule(rule, 100, 4605) == pytest.approx(31.62, abs=5e-3)

    rule = ShrinkageRule(ShrinkageKind.SCALAR_TRUNCATE, RateFormula.SQRT_N_OVER_D_SUM, 1.0)
    assert threshold_from_rule(rule, (10, 10), 2000) == 10.0

    rule = ShrinkageRule(ShrinkageKind.ELEMENTWISE_TRUNCATE, RateFormula.QUARTER_N_OVER_LOG_D, 2.0)
    value = threshold_from_rule(rule, 100, 4605)
    assert value == pytest.approx(2 * (4605 / math.log(100)) ** 0.25, rel=1e-14)
    assert value == pytest.approx(11.25, abs=5e-3)


def test_threshold_needs_positive_log():
    rule = ShrinkageRule(ShrinkageKind.SCALAR_TRUNCATE, RateFormula.SQRT_N_OVER_LOG_D)
    with pytest.raises(ValueError):
        threshold_from_rule(rule, 1, 100)


def test_rate_formulas_against_direct_arithmetic():
    n, d1, d2, delta, R = 3000, 6, 9, 0.5, 2.0
    expected = {
        RateFormula.SQRT_N_OVER_LOG_D: math.sqrt(n / math.log(9)),
        RateFormula.QUARTER_N_OVER_LOG_D: (n / math.log(9)) ** 0.25,
        RateFormula.SQRT_N_OVER_D_SUM: math.sqrt(n / 15),
        RateFormula.SQRT_N_OVER_D_MAX_LOG_D_SUM: math.sqrt(n / (9 * math.log(15))),
        RateFormula.SQRT_N_OVER_D_SUM_LOG_D_SUM: math.sqrt(n / (15 * math.log(15))),
        RateFormula.QUARTER_N_OVER_D_SUM_LOG_D_SUM: (n / (15 * math.log(15))) ** 0.25,
        RateFormula.QUARTER_NR_OVER_DELTA_LOG_D: (n * R / (delta * math.log(9))) ** 0.25,
    }
    for rate, value in expected.items():
        assert rate.evaluate(n, d1, d2, delta, R) == pytest.approx(value, rel=1e-14)


def test_rule_validation():
    with pytest.raises(ValueError):
        ShrinkageRule(ShrinkageKind.SCALAR_TRUNCATE, constant=0.0)
    with pytest.raises(ValueError):
        ShrinkageRule(ShrinkageKind.NORM_SHRINK, order=3)
    # identity ignores rate and constant
    ident = ShrinkageRule(ShrinkageKind.IDENTITY, RateFormula.SQRT_N_OVER_D_SUM, -1.0)
    assert ident.threshold(10, 3, 3) == math.inf
    np.testing.assert_array_equal(ident.apply([1e9, -1e9], 1.0), [1e9, -1e9])


def test_rule_apply_dispatch():
    rows = np.array([[3.0, 4.0], [0.3, 0.4]])
    shrink = ShrinkageRule.fixed(ShrinkageKind.NORM_SHRINK, 1.0, order=2)
    np.testing.assert_allclose(shrink.apply(rows, 1.0), [[0.6, 0.8], [0.3, 0.4]])
    trunc = ShrinkageRule.fixed(ShrinkageKind.ELEMENTWISE_TRUNCATE, 1.0)
    np.testing.assert_allclose(trunc.apply(rows, 1.0), [[1.0, 1.0], [0.3, 0.4]])


# --- properties ------------------------------------------------------------

@CASES
@given(finite, taus)
def test_truncate_scalar_matches_oracle_and_bounds(y, tau):
    out = truncate_scalar(y, tau)
    assert out == clip_scalar(y, tau)
    assert abs(out) <= tau
    assert abs(out) <= abs(y)
    assert out == 0 or math.copysign(1, out) == math.copysign(1, y)


@CASES
@given(finite, taus)
def test_truncate_scalar_idempotent(y, tau):
    once = truncate_scalar(y, tau)
    assert truncate_scalar(once, tau) == once


@CASES
@given(finite, taus, taus)
def test_truncate_scalar_monotone_in_tau(y, t1, t2):
    lo, hi = sorted((t1, t2))
    assert abs(truncate_scalar(y, lo)) <= abs(truncate_scalar(y, hi))


@CASES
@given(vectors, taus)
def test_truncate_elementwise_properties(x, tau):
    out = truncate_elementwise(x, tau)
    assert np.max(np.abs(out)) <= tau
    assert np.max(np.abs(out)) <= np.max(np.abs(x))
    np.testing.assert_array_equal(truncate_elementwise(out, tau), out)
    np.testing.assert_array_equal(out, [clip_scalar(v, tau) for v in x])


@CASES
@given(vectors, taus, taus)
def test_truncate_elementwise_monotone_in_tau(x, t1, t2):
    lo, hi = sorted((t1, t2))
    assert np.all(np.abs(truncate_elementwise(x, lo)) <= np.abs(truncate_elementwise(x, hi)))


@CASES
@given(vectors, taus, orders)
def test_shrink_norm_properties(x, tau, order):
    out = shrink_norm(x, tau, order)
    n_in = np.linalg.norm(x, order)
    n_out = np.linalg.norm(out, order)
    assert n_out <= tau * (1 + 1e-12)
    assert n_out <= n_in * (1 + 1e-12)
    np.testing.assert_allclose(out, naive_shrink(x, tau, order), rtol=1e-12, atol=1e-300)
    # direction preserved: out is a non-negative multiple of x
    if n_in > 0:
        scale = n_out / n_in
        np.testing.assert_allclose(out, scale * x, rtol=1e-12, atol=1e-12 * tau)


@CASES
@given(vectors, taus, orders)
def test_shrink_norm_idempotent(x, tau, order):
    once = shrink_norm(x, tau, order)
    np.testing.assert_allclose(shrink_norm(once, tau, order), once, rtol=1e-12, atol=0)


@CASES
@given(vectors, taus, taus, orders)
def test_shrink_norm_factor_monotone_in_tau(x, t1, t2, order):
    lo, hi = sorted((t1, t2))
    n = np.linalg.norm(x, order)
    if n == 0:
        return
    f_lo = np.linalg.norm(shrink_norm(x, lo, order), order) / n
    f_hi = np.linalg.norm(shrink_norm(x, hi, order), order) / n
    assert f_lo <= f_hi * (1 + 1e-12)


@CASES
@given(finite, taus)
def test_shrink_norm_scalar_collapse(y, tau):
    assert shrink_norm([y], tau, order=2)[0] == pytest.approx(truncate_scalar(y, tau),
                                                               rel=1e-15, abs=0)


@CASES
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 5)), elements=finite),
       taus, orders)
def test_shrink_rows_is_rowwise_shrink_norm(X, tau, order):
    out = shrink_rows(X, tau, order)
    for i in range(X.shape[0]):
        np.testing.assert_allclose(out[i], shrink_norm(X[i], tau, order), rtol=1e-14, atol=0)


@CASES
@given(st.sampled_from(list(RateFormula)), st.integers(1, 10**6), st.integers(2, 500),
       st.integers(2, 500), st.floats(1e-3, 10), st.floats(1e-3, 10))
def test_rates_strictly_positive(rate, n, d1, d2, delta, R):
    assert rate.evaluate(n, d1, d2, delta, R) > 0
