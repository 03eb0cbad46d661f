"""Data robustification operators and threshold-rate rules.

Every operator maps a (possibly heavy-tailed) observation to a bounded one:

* :func:`truncate_scalar` clips a scalar at ``tau`` keeping its sign,
* :func:`truncate_elementwise` does the same coordinate-wise,
* :func:`shrink_norm` rescales a whole vector so that its l2 or l4 norm is at
  most ``tau`` (direction preserved).

Thresholds are only known up to their rate in ``(N, d1, d2, delta, R)``; a
:class:`ShrinkageRule` couples an operator with a :class:`RateFormula` and a
free multiplicative constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "RateFormula",
    "ShrinkageKind",
    "ShrinkageRule",
    "truncate_scalar",
    "truncate_elementwise",
    "shrink_norm",
    "shrink_rows",
    "threshold_from_rule",
]


def _check_tau(tau) -> float:
    tau = float(tau)
    if not tau > 0:  # also rejects nan
        raise ValueError(f"threshold must be positive, got {tau!r}")
    return tau


def truncate_scalar(y: float, tau: float) -> float:
    """Return ``sgn(y) * min(|y|, tau)``.

    Parameters
    ----------
    y : float
        Finite observation.
    tau : float
        Positive threshold; ``inf`` gives the identity.

    Returns
    -------
    float
    """
    tau = _check_tau(tau)
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"cannot truncate non-finite value {y!r}")
    return math.copysign(min(abs(y), tau), y) if y != 0 else 0.0


def truncate_elementwise(x, tau: float) -> np.ndarray:
    """Coordinate-wise :func:`truncate_scalar` on an array of any shape."""
    tau = _check_tau(tau)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot truncate non-finite values")
    return np.clip(x, -tau, tau)


def shrink_norm(x, tau: float, order: int = 2) -> np.ndarray:
    """Rescale ``x`` so that its l_p norm is at most ``tau``.

    Computes ``(min(||x||_p, tau) / ||x||_p) * x`` with ``p = order``. Vectors
    already inside the ball, including zero, are returned unchanged.

    Parameters
    ----------
    x : array_like, shape (d,)
    tau : float
        Positive threshold.
    order : {2, 4}
        Norm used to measure ``x``.
    """
    tau = _check_tau(tau)
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order!r}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot shrink non-finite values")
    norm = np.linalg.norm(x.ravel(), ord=order)
    if norm <= tau:
        return x.copy()
    return x * (tau / norm)


def shrink_rows(X, tau: float, order: int = 2) -> np.ndarray:
    """Apply :func:`shrink_norm` independently to every row of ``X``."""
    tau = _check_tau(tau)
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order!r}")
    X = np.asarray(X, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("cannot shrink non-finite values")
    X2 = X.reshape(X.shape[0], -1)
    norms = np.linalg.norm(X2, ord=order, axis=1)
    scale = np.ones_like(norms)
    big = norms > tau
    scale[big] = tau / norms[big]
    return (X2 * scale[:, None]).reshape(X.shape)


class RateFormula(Enum):
    """Threshold rates, evaluated at sample size ``n`` and dimensions.

    ``d`` stands for ``max(d1, d2)`` and ``d_sum`` for ``d1 + d2``.
    """

    #: sqrt(n / log d), sub-Gaussian linear model.
    SQRT_N_OVER_LOG_D = "sqrt_n_over_log_d"
    #: (n / log d)^(1/4), bounded-moment linear model.
    QUARTER_N_OVER_LOG_D = "quarter_n_over_log_d"
    #: sqrt(n / d_sum), compressed sensing.
    SQRT_N_OVER_D_SUM = "sqrt_n_over_d_sum"
    #: sqrt(n / (d log d_sum)), matrix completion.
    SQRT_N_OVER_D_MAX_LOG_D_SUM = "sqrt_n_over_d_max_log_d_sum"
    #: sqrt(n / (d_sum log d_sum)), multi-task with sub-Gaussian design.
    SQRT_N_OVER_D_SUM_LOG_D_SUM = "sqrt_n_over_d_sum_log_d_sum"
    #: (n / (d_sum log d_sum))^(1/4), multi-task with bounded-moment design.
    QUARTER_N_OVER_D_SUM_LOG_D_SUM = "quarter_n_over_d_sum_log_d_sum"
    #: (n R / (delta log d))^(1/4), l4-shrinkage covariance.
    QUARTER_NR_OVER_DELTA_LOG_D = "quarter_nr_over_delta_log_d"

    def evaluate(self, n, d1, d2=None, delta=1.0, R=1.0) -> float:
        if d2 is None:
            d2 = d1
        if n < 1 or d1 < 1 or d2 < 1:
            raise ValueError("sample size and dimensions must be >= 1")
        d = max(d1, d2)
        d_sum = d1 + d2
        if self in (RateFormula.SQRT_N_OVER_LOG_D, RateFormula.QUARTER_N_OVER_LOG_D,
                    RateFormula.QUARTER_NR_OVER_DELTA_LOG_D) and d < 2:
            raise ValueError(f"rate {self.value} needs d >= 2 for a positive log d")
        if self is RateFormula.SQRT_N_OVER_LOG_D:
            return math.sqrt(n / math.log(d))
        if self is RateFormula.QUARTER_N_OVER_LOG_D:
            return (n / math.log(d)) ** 0.25
        if self is RateFormula.SQRT_N_OVER_D_SUM:
            return math.sqrt(n / d_sum)
        if self is RateFormula.SQRT_N_OVER_D_MAX_LOG_D_SUM:
            return math.sqrt(n / (d * math.log(d_sum)))
        if self is RateFormula.SQRT_N_OVER_D_SUM_LOG_D_SUM:
            return math.sqrt(n / (d_sum * math.log(d_sum)))
        if self is RateFormula.QUARTER_N_OVER_D_SUM_LOG_D_SUM:
            return (n / (d_sum * math.log(d_sum))) ** 0.25
        # QUARTER_NR_OVER_DELTA_LOG_D
        if not delta > 0 or not R > 0:
            raise ValueError("delta and R must be positive")
        return (n * R / (delta * math.log(d))) ** 0.25


class ShrinkageKind(Enum):
    SCALAR_TRUNCATE = "scalar_truncate"
    ELEMENTWISE_TRUNCATE = "elementwise_truncate"
    NORM_SHRINK = "norm_shrink"
    IDENTITY = "identity"


@dataclass(frozen=True)
class ShrinkageRule:
    """Robustification recipe: an operator plus how to pick its threshold.

    The threshold is ``constant * rate.evaluate(...)``. With ``rate=None`` the
    constant itself is the threshold, which is how fixed thresholds (including
    ``inf``) are expressed. ``IDENTITY`` ignores both.

    Parameters
    ----------
    kind : ShrinkageKind
    rate : RateFormula or None
    constant : float
        Positive multiplier in front of the rate.
    order : {2, 4}
        Norm order, used only by ``NORM_SHRINK``.
    """

    kind: ShrinkageKind
    rate: RateFormula | None = None
    constant: float = 1.0
    order: int = 2

    def __post_init__(self):
        if self.kind is ShrinkageKind.IDENTITY:
            return
        if not self.constant > 0:
            raise ValueError(f"constant must be positive, got {self.constant!r}")
        if self.order not in (2, 4):
            raise ValueError(f"order must be 2 or 4, got {self.order!r}")

    @classmethod
    def identity(cls) -> "ShrinkageRule":
        return cls(ShrinkageKind.IDENTITY)

    @classmethod
    def fixed(cls, kind: ShrinkageKind, tau: float, order: int = 2) -> "ShrinkageRule":
        """Rule with a fixed threshold ``tau`` instead of a rate."""
        return cls(kind, None, float(tau), order)

    @property
    def is_identity(self) -> bool:
        return self.kind is ShrinkageKind.IDENTITY

    def threshold(self, n, d1, d2=None, delta=1.0, R=1.0) -> float:
        if self.is_identity:
            return math.inf
        if self.rate is None:
            return float(self.constant)
        return self.constant * self.rate.evaluate(n, d1, d2, delta, R)

    def apply(self, values, tau: float) -> np.ndarray:
        """Robustify a batch of samples with threshold ``tau``.

        ``values`` holds one sample per leading index: a 1-d array is a batch
        of scalars, a 2-d array a batch of row vectors. ``NORM_SHRINK`` on a
        batch of scalars reduces to truncation.
        """
        values = np.asarray(values, dtype=float)
        if self.is_identity:
            return values.copy()
        if self.kind is ShrinkageKind.NORM_SHRINK and values.ndim > 1:
            return shrink_rows(values, tau, self.order)
        return truncate_elementwise(values, tau)


def threshold_from_rule(rule: ShrinkageRule, dims, samples, delta: float = 1.0,
                        R: float = 1.0) -> float:
    """Evaluate ``rule.constant * rate(samples, d1, d2, delta, R)``.

    ``dims`` is an int ``d`` or a pair ``(d1, d2)``.
    """
    d1, d2 = (dims, dims) if np.isscalar(dims) else dims
    return rule.threshold(samples, d1, d2, delta, R)
