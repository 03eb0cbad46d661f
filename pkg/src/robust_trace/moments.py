"""Robust estimators of the cross moment ``E[Y X]`` and the design Gram matrix.

Plugging robust moments into the quadratic risk gives the generalized loss

    L(Theta) = -<S_yx, Theta> + 1/2 vec(Theta)^T S_xx vec(Theta),

and computing them from truncated or shrunk data is the same as fitting the
ordinary least-squares loss to the robustified data.

``S_xx`` is d1 d2 x d1 d2 and is never formed explicitly; each problem keeps
the factored form its solver consumes (see the ``*Gram`` classes below).
Populations are assumed centered: no means are subtracted anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .datasets import DenseDesign, DiagonalDesign, MultiResponse, SingletonDesign, mat, vec
from .shrinkage import ShrinkageRule, shrink_rows, truncate_elementwise

__all__ = [
    "Regime",
    "SingletonScaling",
    "DenseGram",
    "DataFactored",
    "SingletonCounts",
    "SharedGram",
    "RobustMoments",
    "moments_linear",
    "moments_cs",
    "moments_mc",
    "moments_multitask",
    "sample_second_moment",
    "shrinkage_covariance",
    "truncated_covariance_elementwise",
]


class Regime(Enum):
    """Which variables get robustified.

    With a sub-Gaussian design only the response is shrunk; with a design
    that only has bounded moments, both are.
    """

    SUB_GAUSSIAN_DESIGN = "sub_gaussian_design"
    BOUNDED_MOMENT_DESIGN = "bounded_moment_design"


class SingletonScaling(Enum):
    """Design scaling for matrix completion."""

    #: ``X_i = e_j e_k^T``
    RAW = "raw"
    #: ``X_i = sqrt(d1 d2) e_j e_k^T``
    THEORY = "theory"

    def factor(self, d1, d2) -> float:
        return math.sqrt(d1 * d2) if self is SingletonScaling.THEORY else 1.0


@dataclass(frozen=True)
class DenseGram:
    """Explicit d x d Gram matrix (linear model)."""

    matrix: np.ndarray

    def expand(self) -> np.ndarray:
        return self.matrix

    def matvec(self, v):
        return self.matrix @ v


@dataclass(frozen=True)
class DataFactored:
    """Gram matrix ``weight * rows^T rows`` kept as its N x p data factor."""

    rows: np.ndarray
    weight: float

    def expand(self) -> np.ndarray:
        return self.weight * (self.rows.T @ self.rows)

    def matvec(self, v):
        return self.weight * (self.rows.T @ (self.rows @ v))


@dataclass(frozen=True)
class SingletonCounts:
    """Sufficient statistics of a singleton design.

    ``counts[j, k]`` is the number of observations of entry ``(j, k)`` and
    ``sums[j, k]`` the sum of their (robustified) responses. With design scale
    ``s`` the Gram matrix is diagonal with ``vec(s^2 counts / N)`` and the
    cross moment is ``s sums / N``.
    """

    counts: np.ndarray
    sums: np.ndarray
    n_obs: int
    scale: float = 1.0

    @property
    def shape(self):
        return self.counts.shape

    @property
    def cross(self) -> np.ndarray:
        return self.scale * self.sums / self.n_obs

    @property
    def gram_diagonal(self) -> np.ndarray:
        """Diagonal of the Gram matrix, as a d1 x d2 matrix."""
        return self.scale**2 * self.counts / self.n_obs

    def expand(self) -> np.ndarray:
        return np.diag(vec(self.gram_diagonal))

    def matvec(self, v):
        return vec(self.gram_diagonal) * v


@dataclass(frozen=True)
class SharedGram:
    """Block-diagonal Gram ``factor * diag(block, ..., block)`` with ``copies`` blocks."""

    block: np.ndarray
    factor: float
    copies: int

    def expand(self) -> np.ndarray:
        return self.factor * np.kron(np.eye(self.copies), self.block)

    def matvec(self, v):
        d1 = self.block.shape[0]
        return self.factor * vec(self.block @ mat(v, (d1, self.copies)))


@dataclass(frozen=True)
class RobustMoments:
    """Robust ``(S_yx, S_xx)`` pair.

    ``cross`` is d1 x d2 (a length-d vector for the linear model); ``gram`` is
    one of :class:`DenseGram`, :class:`DataFactored`, :class:`SingletonCounts`
    or :class:`SharedGram`. ``thresholds`` records the realized thresholds.
    """

    cross: np.ndarray
    gram: object
    thresholds: dict = field(default_factory=dict)

    def loss(self, theta) -> float:
        """Generalized quadratic loss at ``theta`` (matrix or vector)."""
        theta = np.asarray(theta, dtype=float)
        v = vec(theta)
        return float(-np.dot(vec(self.cross), v) + 0.5 * v @ self.gram.matvec(v))


def _threshold(rule, n, d1, d2, delta):
    if rule is None:
        return math.inf
    return rule.threshold(n, d1, d2, delta)


def _identity_if_none(rule):
    return ShrinkageRule.identity() if rule is None else rule


def moments_linear(data: DiagonalDesign, regime=Regime.SUB_GAUSSIAN_DESIGN,
                   response_rule: ShrinkageRule | None = None,
                   design_rule: ShrinkageRule | None = None,
                   delta: float = 1.0) -> RobustMoments:
    """Robust moments of the sparse linear model.

    Responses are truncated with ``response_rule``; under
    ``BOUNDED_MOMENT_DESIGN`` the design entries are also truncated
    elementwise with ``design_rule``. A missing rule means no truncation.
    """
    if not isinstance(data, DiagonalDesign):
        raise TypeError("moments_linear needs a DiagonalDesign dataset")
    N, d = data.x.shape
    response_rule = _identity_if_none(response_rule)
    tau_y = _threshold(response_rule, N, d, d, delta)
    y = response_rule.apply(data.Y, tau_y)
    x = data.x
    tau_x = math.inf
    if regime is Regime.BOUNDED_MOMENT_DESIGN and design_rule is not None:
        tau_x = _threshold(design_rule, N, d, d, delta)
        x = design_rule.apply(x, tau_x)
    cross = x.T @ y / N
    gram = x.T @ x / N
    return RobustMoments(cross, DenseGram(gram), {"response": tau_y, "design": tau_x})


def moments_cs(data: DenseDesign, response_rule: ShrinkageRule | None = None,
               delta: float = 1.0) -> RobustMoments:
    """Robust moments for compressed sensing with a Gaussian design.

    Only responses are truncated; the design Gram matrix is the plain sample
    second moment, kept in factored form.
    """
    if not isinstance(data, DenseDesign):
        raise TypeError("moments_cs needs a DenseDesign dataset")
    N = data.n_obs
    d1, d2 = data.dims
    response_rule = _identity_if_none(response_rule)
    tau = _threshold(response_rule, N, d1, d2, delta)
    y = response_rule.apply(data.Y, tau)
    rows = data.rows()
    cross = mat(rows.T @ y / N, (d1, d2))
    return RobustMoments(cross, DataFactored(rows, 1.0 / N), {"response": tau})


def moments_mc(data: SingletonDesign, response_rule: ShrinkageRule | None = None,
               scaling: SingletonScaling | None = None, delta: float = 1.0) -> RobustMoments:
    """Count/sum statistics for matrix completion with truncated responses.

    ``scaling`` defaults to the one the dataset was built with; passing a
    different one reinterprets the design as ``scaling.factor * e_j e_k^T``.
    """
    if not isinstance(data, SingletonDesign):
        raise TypeError("moments_mc needs a SingletonDesign dataset")
    d1, d2 = data.shape
    N = data.n_obs
    if scaling is None:
        scale = data.scale
    else:
        scale = scaling.factor(d1, d2)
    response_rule = _identity_if_none(response_rule)
    tau = _threshold(response_rule, N, d1, d2, delta)
    y = response_rule.apply(data.Y, tau)
    flat = data.rows * d2 + data.cols
    counts = np.bincount(flat, minlength=d1 * d2).reshape(d1, d2)
    sums = np.bincount(flat, weights=y, minlength=d1 * d2).reshape(d1, d2)
    stats = SingletonCounts(counts, sums, N, scale)
    return RobustMoments(stats.cross, stats, {"response": tau})


def moments_multitask(data: MultiResponse, regime=Regime.SUB_GAUSSIAN_DESIGN,
                      response_rule: ShrinkageRule | None = None,
                      design_rule: ShrinkageRule | None = None,
                      delta: float = 1.0) -> RobustMoments:
    """Robust moments of multi-task regression.

    Response rows are shrunk with ``response_rule``; design rows are shrunk
    with ``design_rule`` only under ``BOUNDED_MOMENT_DESIGN``. Thresholds are
    evaluated at the number of samples ``n`` (not ``n * d2``). The cross
    moment is ``S_xy / d2`` and the Gram matrix ``diag(S_xx, ..., S_xx) / d2``.
    """
    if not isinstance(data, MultiResponse):
        raise TypeError("moments_multitask needs a MultiResponse dataset")
    X, Y = shrink_multitask_rows(data, regime, response_rule, design_rule, delta)
    n = data.n
    d1, d2 = data.dims
    s_xy = X.T @ Y / n
    s_xx = X.T @ X / n
    taus = {"response": _threshold(_identity_if_none(response_rule), n, d1, d2, delta),
            "design": (_threshold(_identity_if_none(design_rule), n, d1, d2, delta)
                       if regime is Regime.BOUNDED_MOMENT_DESIGN else math.inf)}
    return RobustMoments(s_xy / d2, SharedGram(s_xx, 1.0 / d2, d2), taus)


def shrink_multitask_rows(data: MultiResponse, regime, response_rule, design_rule, delta=1.0):
    """Return the robustified ``(X, Y)`` row matrices of a multi-task dataset."""
    n = data.n
    d1, d2 = data.dims
    response_rule = _identity_if_none(response_rule)
    Y = response_rule.apply(data.Y, _threshold(response_rule, n, d1, d2, delta))
    X = data.X
    if regime is Regime.BOUNDED_MOMENT_DESIGN and design_rule is not None:
        X = design_rule.apply(X, _threshold(design_rule, n, d1, d2, delta))
    return X, Y


def _samples(samples):
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty (n, d) array of samples")
    if not np.all(np.isfinite(X)):
        raise ValueError("samples contain non-finite values")
    return X


def sample_second_moment(samples) -> np.ndarray:
    """Classical ``(1/n) sum x_i x_i^T`` (no centering)."""
    X = _samples(samples)
    return X.T @ X / X.shape[0]


def shrinkage_covariance(samples, tau: float) -> np.ndarray:
    """l4-norm shrinkage covariance ``(1/n) sum x~_i x~_i^T``.

    Each sample is rescaled so that ``||x~_i||_4 <= tau``. The result is
    always symmetric positive semidefinite.
    """
    X = shrink_rows(_samples(samples), tau, order=4)
    return X.T @ X / X.shape[0]


def truncated_covariance_elementwise(samples, tau: float) -> np.ndarray:
    """Second moment of elementwise-truncated samples; entries lie in [-tau^2, tau^2]."""
    X = truncate_elementwise(_samples(samples), tau)
    return X.T @ X / X.shape[0]
