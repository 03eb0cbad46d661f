import math

import numpy as np
import pytest

from robust_trace.datasets import DenseDesign, DiagonalDesign, MultiResponse, SingletonDesign
from robust_trace.estimators import (LambdaRule, ProblemKind, ProblemSpec, ShrinkagePlan,
                                     default_shrinkage, estimate, lambda_for, penalized_objective)
from robust_trace.moments import Regime, SingletonScaling
from robust_trace.shrinkage import RateFormula, ShrinkageKind, ShrinkageRule
from robust_trace.solvers import AdmmConfig, CdConfig, PrsmConfig, nuclear_norm

CS = ProblemKind.COMPRESSED_SENSING
MC = ProblemKind.MATRIX_COMPLETION
MT = ProblemKind.MULTI_TASK
LIN = ProblemKind.LINEAR


def test_lambda_examples():
    spec = ProblemSpec(MT, (10, 10))
    value = lambda_for(spec, LambdaRule(2.0, 1.0), 2000)
    assert value == pytest.approx((2 / 10) * math.sqrt(20 * math.log(20) / 2000), rel=1e-14)
    assert value == pytest.approx(0.0346, abs=5e-5)
    assert lambda_for(ProblemSpec(CS, (10, 10)), LambdaRule(1.0), 2000) == pytest.approx(0.1)
    value = lambda_for(ProblemSpec(LIN, (100, 100)), LambdaRule(1.0, 1.0), 4605)
    assert value == pytest.approx(math.sqrt(math.log(100) / 4605), rel=1e-14)
    assert value == pytest.approx(0.0316, abs=5e-5)
    value = lambda_for(ProblemSpec(MC, (6, 9), spikiness=1.0), LambdaRule(1.5, 0.5), 700)
    assert value == pytest.approx(1.5 * math.sqrt(0.5 * 9 * math.log(15) / 700), rel=1e-14)


def test_lambda_errors():
    with pytest.raises(ValueError):
        lambda_for(ProblemSpec(LIN, (1, 1)), LambdaRule(), 100)
    with pytest.raises(ValueError):
        lambda_for(ProblemSpec(CS, (3, 3)), LambdaRule(), 1)
    with pytest.raises(ValueError):
        LambdaRule(constant=0.0)
    with pytest.raises(ValueError):
        LambdaRule(delta=-1.0)


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(CS, (3, 3), schatten_q=1.5)
    with pytest.raises(ValueError):
        ProblemSpec(CS, (3, 3), schatten_radius=0.0)
    with pytest.raises(ValueError):
        ProblemSpec(MC, (3, 3))
    with pytest.raises(ValueError):
        ProblemSpec(LIN, (3, 4))


def test_default_shrinkage_rates():
    plan = default_shrinkage(ProblemSpec(LIN, (5, 5), Regime.BOUNDED_MOMENT_DESIGN), 2.0, 3.0)
    assert plan.response.rate is RateFormula.QUARTER_N_OVER_LOG_D
    assert plan.design.kind is ShrinkageKind.ELEMENTWISE_TRUNCATE
    assert plan.design.constant == 3.0
    plan = default_shrinkage(ProblemSpec(MT, (5, 4), Regime.BOUNDED_MOMENT_DESIGN))
    assert plan.response.order == 4 and plan.design.order == 4
    plan = default_shrinkage(ProblemSpec(MT, (5, 4)))
    assert plan.response.order == 2 and plan.design is None
    assert default_shrinkage(ProblemSpec(CS, (3, 3))).response.rate is RateFormula.SQRT_N_OVER_D_SUM


def test_linear_noiseless_recovery():
    rng = np.random.default_rng(0)
    theta = rng.standard_normal(6)
    x = rng.standard_normal((80, 6))
    res = estimate(ProblemSpec(LIN, (6, 6)), DiagonalDesign(x, x @ theta), None, 0.0,
                   CdConfig(tol=1e-12, max_iter=100000))
    np.testing.assert_allclose(res.estimate, theta, atol=1e-6)


def _datasets(rng, zero=False):
    d1, d2 = 4, 3
    Y = (lambda n: np.zeros(n)) if zero else (lambda n: rng.standard_normal(n))
    return {
        LIN: (ProblemSpec(LIN, (4, 4)), DiagonalDesign(rng.standard_normal((30, 4)), Y(30))),
        CS: (ProblemSpec(CS, (d1, d2)), DenseDesign(rng.standard_normal((30, d1, d2)), Y(30))),
        MC: (ProblemSpec(MC, (d1, d2), spikiness=2.0),
             SingletonDesign(rng.integers(0, d1, 40), rng.integers(0, d2, 40), Y(40), (d1, d2))),
        MT: (ProblemSpec(MT, (d1, d2)),
             MultiResponse(rng.standard_normal((30, d1)), Y(90).reshape(30, 3))),
    }


@pytest.mark.parametrize("kind", [LIN, CS, MC, MT])
def test_zero_responses_give_zero_estimate(kind):
    spec, data = _datasets(np.random.default_rng(1), zero=True)[kind]
    res = estimate(spec, data, default_shrinkage(spec), LambdaRule(1.0))
    np.testing.assert_allclose(res.estimate, 0.0, atol=1e-12)
    for key in ("tau_response", "tau_design", "lambda_N", "solver_lambda"):
        assert key in res.diagnostics


@pytest.mark.parametrize("kind", [LIN, CS, MC, MT])
def test_estimate_minimizes_generalized_objective(kind):
    rng = np.random.default_rng(2)
    spec, data = _datasets(rng)[kind]
    plan = default_shrinkage(spec, 0.5)
    lam = 0.05
    cfgs = {LIN: CdConfig(tol=1e-12), CS: PrsmConfig(tol=1e-11), MT: PrsmConfig(tol=1e-11),
            MC: AdmmConfig(tol=1e-10, max_iter=200000)}
    res = estimate(spec, data, plan, lam, cfgs[kind])
    best = penalized_objective(spec, data, res.estimate, plan, lam)
    box = res.diagnostics.get("box", math.inf)
    for _ in range(200):
        cand = res.estimate + 1e-3 * rng.standard_normal(res.estimate.shape)
        if kind is MC:
            cand = np.clip(cand, -box, box)
        assert penalized_objective(spec, data, cand, plan, lam) >= best - 1e-9


def test_encoding_and_dims_mismatch():
    rng = np.random.default_rng(3)
    sets = _datasets(rng)
    with pytest.raises(TypeError):
        estimate(sets[CS][0], sets[MT][1])
    with pytest.raises(ValueError):
        estimate(ProblemSpec(CS, (3, 4)), sets[CS][1])
    spec = ProblemSpec(MC, (4, 3), spikiness=1.0, singleton_scaling=SingletonScaling.THEORY)
    with pytest.raises(ValueError):
        estimate(spec, sets[MC][1])
    with pytest.raises(ValueError):
        estimate(ProblemSpec(CS, (4, 3), Regime.BOUNDED_MOMENT_DESIGN), sets[CS][1])


def test_diagonal_encoding_matrix_pipeline_agrees_with_lasso():
    rng = np.random.default_rng(4)
    theta = np.array([2.0, 0.0, -1.0, 0.5])
    x = rng.standard_normal((50, 4))
    data = DiagonalDesign(x, x @ theta + 0.3 * rng.standard_normal(50))
    lam = 0.1
    lasso = estimate(ProblemSpec(LIN, (4, 4)), data, None, lam, CdConfig(tol=1e-12))
    dense = estimate(ProblemSpec(CS, (4, 4)), data.to_dense(), None, lam,
                     PrsmConfig(tol=1e-11, max_iter=100000))
    np.testing.assert_allclose(np.diag(dense.estimate), lasso.estimate, atol=1e-6)
    np.testing.assert_allclose(dense.estimate - np.diag(np.diag(dense.estimate)), 0, atol=1e-6)


@pytest.mark.parametrize("kind", [CS, MT, MC])
def test_nuclear_norm_non_increasing_in_lambda(kind):
    spec, data = _datasets(np.random.default_rng(5))[kind]
    cfg = {CS: PrsmConfig(tol=1e-11), MT: PrsmConfig(tol=1e-11),
           MC: AdmmConfig(tol=1e-10, max_iter=200000)}[kind]
    norms = [nuclear_norm(estimate(spec, data, None, lam, cfg).estimate)
             for lam in (0.0, 0.01, 0.05, 0.1, 0.3, 1.0)]
    assert all(b <= a + 1e-6 for a, b in zip(norms, norms[1:]))


def test_matrix_completion_respects_box():
    rng = np.random.default_rng(6)
    d = 5
    data = SingletonDesign(rng.integers(0, d, 100), rng.integers(0, d, 100),
                           rng.standard_cauchy(100) * 5, (d, d), d)
    spec = ProblemSpec(MC, (d, d), spikiness=1.5, singleton_scaling=SingletonScaling.THEORY)
    res = estimate(spec, data, None, LambdaRule(0.1))
    assert np.abs(res.estimate).max() <= 1.5 / d
    assert res.diagnostics["box"] == pytest.approx(0.3)


def test_bounded_moment_multitask_shrinks_design():
    rng = np.random.default_rng(7)
    X = rng.standard_t(2, (40, 3)) * 10
    Y = rng.standard_t(2, (40, 2)) * 10
    spec = ProblemSpec(MT, (3, 2), Regime.BOUNDED_MOMENT_DESIGN)
    plan = ShrinkagePlan(ShrinkageRule.fixed(ShrinkageKind.NORM_SHRINK, 1.0, 4),
                         ShrinkageRule.fixed(ShrinkageKind.NORM_SHRINK, 2.0, 4))
    res = estimate(spec, MultiResponse(X, Y), plan, 0.01)
    assert res.diagnostics["tau_design"] == 2.0
    assert res.diagnostics["solver_lambda"] == pytest.approx(2 * 2 * 0.01)
