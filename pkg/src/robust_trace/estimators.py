"""One-call robust M-estimators for the four trace-regression instances.

:func:`estimate` robustifies the data according to a :class:`ShrinkagePlan`,
picks ``lambda_N`` from a :class:`LambdaRule` and runs the matching solver.
It minimizes

    -<S_yx, Theta> + 1/2 vec(Theta)^T S_xx vec(Theta) + lambda_N ||Theta||_*

(over ``||Theta||_max <= R / sqrt(d1 d2)`` for matrix completion under the
rescaled design). The solvers work with the least-squares form of the loss, so
the penalty handed to them is rescaled accordingly: ``2 lambda_N`` for
compressed sensing and matrix completion, ``2 d2 lambda_N`` for multi-task
regression.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .datasets import DenseDesign, DiagonalDesign, MultiResponse, SingletonDesign, TraceDataset
from .moments import (Regime, SingletonScaling, moments_cs, moments_linear, moments_mc, moments_multitask,
                      shrink_multitask_rows)
from .shrinkage import RateFormula, ShrinkageKind, ShrinkageRule
from .solvers import (AdmmConfig, CdConfig, FitResult, PrsmConfig, admm_matrix_completion,
                      cd_lasso, nuclear_norm, prsm_compressed_sensing, prsm_multitask)

__all__ = [
    "ProblemKind",
    "ProblemSpec",
    "LambdaRule",
    "ShrinkagePlan",
    "lambda_for",
    "default_shrinkage",
    "estimate",
    "penalized_objective",
]


class ProblemKind(Enum):
    LINEAR = "linear"
    COMPRESSED_SENSING = "compressed_sensing"
    MATRIX_COMPLETION = "matrix_completion"
    MULTI_TASK = "multi_task"


_DATA_TYPES = {
    ProblemKind.LINEAR: DiagonalDesign,
    ProblemKind.COMPRESSED_SENSING: DenseDesign,
    ProblemKind.MATRIX_COMPLETION: SingletonDesign,
    ProblemKind.MULTI_TASK: MultiResponse,
}


@dataclass(frozen=True)
class ProblemSpec:
    """Problem instance description.

    ``spikiness`` is the max-norm radius ``R`` of matrix completion; the box
    actually imposed on the coefficient is ``R / design_scale``, where the
    design scale follows ``singleton_scaling`` (1 or ``sqrt(d1 d2)``).
    ``schatten_q`` and ``schatten_radius`` describe the assumed
    Schatten-q ball and are only used as metadata for rate checks.
    """

    kind: ProblemKind
    dims: tuple
    regime: Regime = Regime.SUB_GAUSSIAN_DESIGN
    spikiness: float | None = None
    schatten_q: float = 0.0
    schatten_radius: float = 5.0
    singleton_scaling: SingletonScaling = SingletonScaling.RAW

    def __post_init__(self):
        d1, d2 = self.dims
        object.__setattr__(self, "dims", (int(d1), int(d2)))
        if not 0 <= self.schatten_q <= 1:
            raise ValueError("schatten_q must lie in [0, 1]")
        if not self.schatten_radius > 0:
            raise ValueError("schatten_radius must be positive")
        if self.kind is ProblemKind.MATRIX_COMPLETION:
            if self.spikiness is None or not self.spikiness > 0:
                raise ValueError("matrix completion needs a positive spikiness radius R")
        if self.kind is ProblemKind.LINEAR and d1 != d2:
            raise ValueError("linear model needs d1 == d2")


@dataclass(frozen=True)
class LambdaRule:
    """Penalty level ``lambda_N = constant * rate``.

    The rate defaults to the one matching the problem kind:

    * linear: ``sqrt(delta log d / N)``
    * compressed sensing: ``sqrt((d1 + d2) / N)``
    * matrix completion: ``sqrt(delta (d1 v d2) log(d1 + d2) / N)``
    * multi-task: ``(1 / d2) sqrt(delta (d1 + d2) log(d1 + d2) / n)``

    ``constant`` absorbs every unspecified multiplier of the theory.
    """

    constant: float = 1.0
    delta: float = 1.0
    form: ProblemKind | None = None

    def __post_init__(self):
        if not self.constant > 0:
            raise ValueError("lambda constant must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")


def lambda_for(spec: ProblemSpec, rule: LambdaRule, samples: int) -> float:
    """Evaluate ``rule`` for ``spec`` at ``samples`` (``N``, or ``n`` for multi-task)."""
    form = rule.form or spec.kind
    d1, d2 = spec.dims
    if samples < 2:
        raise ValueError("need at least 2 samples")
    c, delta = rule.constant, rule.delta
    if form is ProblemKind.LINEAR:
        d = max(d1, d2)
        if d < 2:
            raise ValueError("linear rate needs d >= 2")
        return c * math.sqrt(delta * math.log(d) / samples)
    if form is ProblemKind.COMPRESSED_SENSING:
        return c * math.sqrt((d1 + d2) / samples)
    if d1 + d2 < 2:
        raise ValueError("rate needs d1 + d2 >= 2")
    if form is ProblemKind.MATRIX_COMPLETION:
        return c * math.sqrt(delta * max(d1, d2) * math.log(d1 + d2) / samples)
    return (c / d2) * math.sqrt(delta * (d1 + d2) * math.log(d1 + d2) / samples)


@dataclass(frozen=True)
class ShrinkagePlan:
    """Rules for the response and, under bounded-moment designs, the design."""

    response: ShrinkageRule = ShrinkageRule.identity()
    design: ShrinkageRule | None = None

    @classmethod
    def standard(cls) -> "ShrinkagePlan":
        """No robustification: the classical M-estimator."""
        return cls()


def default_shrinkage(spec: ProblemSpec, constant: float = 1.0,
                      design_constant: float | None = None) -> ShrinkagePlan:
    """Robustification with the theoretically motivated threshold rates.

    ``design_constant`` defaults to ``constant``.
    """
    kind, regime = spec.kind, spec.regime
    bounded = regime is Regime.BOUNDED_MOMENT_DESIGN
    if design_constant is None:
        design_constant = constant
    trunc = ShrinkageKind.SCALAR_TRUNCATE
    if kind is ProblemKind.LINEAR:
        if bounded:
            return ShrinkagePlan(
                ShrinkageRule(trunc, RateFormula.QUARTER_N_OVER_LOG_D, constant),
                ShrinkageRule(ShrinkageKind.ELEMENTWISE_TRUNCATE, RateFormula.QUARTER_N_OVER_LOG_D,
                              design_constant))
        return ShrinkagePlan(ShrinkageRule(trunc, RateFormula.SQRT_N_OVER_LOG_D, constant))
    if kind is ProblemKind.COMPRESSED_SENSING:
        return ShrinkagePlan(ShrinkageRule(trunc, RateFormula.SQRT_N_OVER_D_SUM, constant))
    if kind is ProblemKind.MATRIX_COMPLETION:
        return ShrinkagePlan(ShrinkageRule(trunc, RateFormula.SQRT_N_OVER_D_MAX_LOG_D_SUM,
                                           constant))
    shrink = ShrinkageKind.NORM_SHRINK
    if bounded:
        rate = RateFormula.QUARTER_N_OVER_D_SUM_LOG_D_SUM
        return ShrinkagePlan(ShrinkageRule(shrink, rate, constant, order=4),
                             ShrinkageRule(shrink, rate, design_constant, order=4))
    return ShrinkagePlan(ShrinkageRule(shrink, RateFormula.SQRT_N_OVER_D_SUM_LOG_D_SUM,
                                       constant, order=2))


def _threshold(rule, n, dims, delta):
    if rule is None:
        return math.inf
    return rule.threshold(n, dims[0], dims[1], delta)


def estimate(spec: ProblemSpec, data: TraceDataset, shrinkage: ShrinkagePlan | None = None,
             lambda_rule: LambdaRule | float = LambdaRule(), solver_config=None) -> FitResult:
    """Fit the robust M-estimator for one problem instance.

    Parameters
    ----------
    spec : ProblemSpec
    data : TraceDataset
        Encoding must match ``spec.kind``.
    shrinkage : ShrinkagePlan, optional
        Defaults to no shrinkage (the standard estimator).
    lambda_rule : LambdaRule or float
        A float is used as ``lambda_N`` directly.
    solver_config : CdConfig, PrsmConfig or AdmmConfig, optional
        Solver settings; its ``lam`` (and ``box``) fields are overwritten.

    Returns
    -------
    FitResult
        ``diagnostics`` records the thresholds, ``lambda_N`` and the penalty
        passed to the solver.
    """
    expected = _DATA_TYPES[spec.kind]
    if not isinstance(data, expected):
        raise TypeError(f"{spec.kind.value} needs a {expected.__name__} dataset, "
                        f"got {type(data).__name__}")
    if tuple(data.dims) != spec.dims:
        raise ValueError(f"dataset dims {data.dims} do not match spec dims {spec.dims}")
    plan = shrinkage or ShrinkagePlan.standard()
    d1, d2 = spec.dims
    samples = data.n if spec.kind is ProblemKind.MULTI_TASK else data.n_obs
    if isinstance(lambda_rule, LambdaRule):
        lam_n = lambda_for(spec, lambda_rule, samples)
        delta = lambda_rule.delta
    else:
        lam_n = float(lambda_rule)
        delta = 1.0
        if not lam_n >= 0:
            raise ValueError("lambda must be non-negative")
    bounded = spec.regime is Regime.BOUNDED_MOMENT_DESIGN
    tau_y = _threshold(plan.response, samples, spec.dims, delta)
    tau_x = _threshold(plan.design, samples, spec.dims, delta) if bounded else math.inf
    diag = {"tau_response": tau_y, "tau_design": tau_x, "lambda_N": lam_n}

    if spec.kind is ProblemKind.LINEAR:
        mom = moments_linear(data, spec.regime, plan.response, plan.design, delta)
        cfg = dataclasses.replace(solver_config or CdConfig(), lam=lam_n)
        res = cd_lasso(mom.gram, mom.cross, cfg)
        diag["solver_lambda"] = lam_n
    elif spec.kind is ProblemKind.COMPRESSED_SENSING:
        if bounded:
            raise ValueError("compressed sensing is only supported with a sub-Gaussian design")
        y = plan.response.apply(data.Y, tau_y)
        cfg = dataclasses.replace(solver_config or PrsmConfig(), lam=2.0 * lam_n)
        res = prsm_compressed_sensing(data.rows(), y, spec.dims, cfg)
        diag["solver_lambda"] = cfg.lam
    elif spec.kind is ProblemKind.MATRIX_COMPLETION:
        if bounded:
            raise ValueError("matrix completion uses the singleton design; no design shrinkage")
        if not math.isclose(data.scale, spec.singleton_scaling.factor(d1, d2)):
            raise ValueError(f"dataset design scale {data.scale} does not match "
                             f"{spec.singleton_scaling.value} scaling")
        mom = moments_mc(data, plan.response, delta=delta)
        box = spec.spikiness / data.scale
        cfg = dataclasses.replace(solver_config or AdmmConfig(), lam=2.0 * lam_n, box=box)
        res = admm_matrix_completion(mom.gram, cfg)
        diag["solver_lambda"] = cfg.lam
        diag["box"] = box
    else:
        X, Y = shrink_multitask_rows(data, spec.regime, plan.response, plan.design, delta)
        cfg = dataclasses.replace(solver_config or PrsmConfig(), lam=2.0 * d2 * lam_n)
        res = prsm_multitask(X, Y, cfg)
        diag["solver_lambda"] = cfg.lam
    res.diagnostics.update(diag)
    return res


def penalized_objective(spec: ProblemSpec, data: TraceDataset, theta,
                        shrinkage: ShrinkagePlan | None, lam_n: float, delta: float = 1.0) -> float:
    """Generalized loss plus ``lam_n`` times the nuclear (l1 for linear) norm."""
    plan = shrinkage or ShrinkagePlan.standard()
    if spec.kind is ProblemKind.LINEAR:
        mom = moments_linear(data, spec.regime, plan.response, plan.design, delta)
        theta = np.asarray(theta, dtype=float).ravel()
        return mom.loss(theta) + lam_n * float(np.abs(theta).sum())
    if spec.kind is ProblemKind.COMPRESSED_SENSING:
        mom = moments_cs(data, plan.response, delta)
    elif spec.kind is ProblemKind.MATRIX_COMPLETION:
        mom = moments_mc(data, plan.response, delta=delta)
    else:
        mom = moments_multitask(data, spec.regime, plan.response, plan.design, delta)
    return mom.loss(theta) + lam_n * nuclear_norm(theta)
