"""Optimization kernels for nuclear-norm penalized trace regression.

* :func:`prsm_compressed_sensing` and :func:`prsm_multitask` run the
  contractive Peaceman-Rachford splitting method on

      (1/N) ||Y - X theta||^2 + lam ||mat(theta)||_*

* :func:`admm_matrix_completion` solves the max-norm constrained matrix
  completion problem through its semidefinite lifting,
* :func:`cd_lasso` is cyclic coordinate descent for the l1-penalized
  generalized quadratic loss (linear model).

Splitting solvers report non-convergence through ``FitResult.converged``;
they never raise on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .datasets import mat, vec
from .moments import SingletonCounts

__all__ = [
    "FitResult",
    "PrsmConfig",
    "AdmmConfig",
    "CdConfig",
    "svd_soft_threshold",
    "nuclear_norm",
    "project_psd",
    "project_box",
    "prsm_compressed_sensing",
    "prsm_multitask",
    "admm_matrix_completion",
    "cd_lasso",
]


@dataclass
class FitResult:
    """Estimate plus convergence diagnostics.

    ``objective`` is the final value of the objective the solver minimizes;
    ``objective_trace`` is filled only when the config asks for it.
    """

    estimate: np.ndarray
    iterations: int
    final_residual: float
    converged: bool
    objective: float = math.nan
    objective_trace: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PrsmConfig:
    lam: float = 0.0
    alpha: float = 0.9
    beta: float = 1.0
    tol: float = 1e-7
    max_iter: int = 10_000
    track_objective: bool = False

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


@dataclass(frozen=True)
class AdmmConfig:
    lam: float = 0.0
    rho: float = 0.1
    gamma: float = 1.618
    box: float = math.inf
    tol: float = 1e-7
    max_iter: int = 10_000
    track_objective: bool = False

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.box >= 0:
            raise ValueError("box radius must be non-negative")
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


@dataclass(frozen=True)
class CdConfig:
    lam: float = 0.0
    tol: float = 1e-7
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")
        if not self.tol > 0 or self.max_iter < 1:
            raise ValueError("tol must be positive and max_iter >= 1")


def _svt(A, tau):
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep], s


def svd_soft_threshold(A, tau: float) -> np.ndarray:
    """Singular value soft-thresholding ``U diag((s - tau)_+) V^T``.

    This is the proximal operator of ``tau * ||.||_*``.
    """
    if not tau >= 0:
        raise ValueError(f"tau must be non-negative, got {tau!r}")
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("A contains non-finite values")
    if tau == 0:
        return A.copy()
    return _svt(A, tau)[0]


def nuclear_norm(A) -> float:
    return float(np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False).sum())


def _psd_clip(M):
    w, V = np.linalg.eigh(M)
    pos = w > 0
    P = (V[:, pos] * w[pos]) @ V[:, pos].T
    # exact symmetry despite rounding in the product
    return 0.5 * (P + P.T)


def project_psd(M, sym_tol: float = 1e-8) -> np.ndarray:
    """Frobenius projection onto the PSD cone (negative eigenvalues set to 0).

    Inputs whose asymmetry ``max|M - M^T|`` exceeds ``sym_tol`` (relative to
    ``max(1, max|M|)``) are rejected; smaller asymmetry is symmetrized away.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("need a square matrix")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.T).max(initial=0.0) > sym_tol * scale:
        raise ValueError("matrix is not symmetric")
    return _psd_clip(0.5 * (M + M.T))


def project_box(v, R: float):
    """Clamp ``v`` (scalar or array) to ``[-R, R]``."""
    if not R >= 0:
        raise ValueError("R must be non-negative")
    out = np.clip(v, -R, R)
    return float(out) if np.ndim(out) == 0 else out


class _RidgeSolver:
    """Solves ``(2 A^T A / n + beta I) x = b`` for a fixed A.

    Factors once; when n < p it goes through the n x n system instead.
    """

    def __init__(self, A, beta):
        n, p = A.shape
        self.A = A
        self.beta = beta
        self.wide = n < p
        if self.wide:
            self.chol = sla.cho_factor(A @ A.T + (beta * n / 2.0) * np.eye(n))
        else:
            self.chol = sla.cho_factor((2.0 / n) * (A.T @ A) + beta * np.eye(p))

    def __call__(self, b):
        if not self.wide:
            return sla.cho_solve(self.chol, b)
        A = self.A
        return (b - A.T @ sla.cho_solve(self.chol, A @ b)) / self.beta


def _prsm(A, Y, shape, config, init):
    """Shared PRSM loop; ``Y`` is a vector (compressed sensing) or matrix (multi-task).

    For compressed sensing the iterate lives in R^{d1 d2} (vec of the
    matrix); for multi-task it is the d1 x d2 matrix itself.
    """
    n = A.shape[0]
    alpha, beta, lam = config.alpha, config.beta, config.lam
    solve = _RidgeSolver(A, beta)
    rhs = (2.0 / n) * (A.T @ Y)
    is_vec = rhs.ndim == 1

    def to_mat(t):
        return mat(t, shape) if is_vec else t

    def to_var(M):
        return vec(M) if is_vec else M

    def objective(t, nuc=None):
        r = Y - A @ t
        if nuc is None:
            nuc = nuclear_norm(to_mat(t))
        return float(np.sum(r * r) / n + lam * nuc)

    theta_y = np.zeros_like(rhs) if init is None else to_var(np.asarray(init, dtype=float)).copy()
    mult = np.zeros_like(rhs)
    trace = []
    converged = False
    resid = math.inf
    k = 0
    for k in range(1, config.max_iter + 1):
        theta_x = solve(beta * theta_y + mult + rhs)
        mult = mult - alpha * beta * (theta_x - theta_y)
        Z, s = _svt(to_mat(theta_x - mult / beta), lam / beta)
        theta_y = to_var(Z)
        diff = theta_x - theta_y
        mult = mult - alpha * beta * diff
        resid = float(np.linalg.norm(diff))
        if config.track_objective:
            trace.append(objective(theta_y, s.sum()))
        if resid <= config.tol:
            converged = True
            break
    estimate = to_mat(theta_y)
    return FitResult(estimate, k, resid, converged, objective(theta_y), trace)


def prsm_compressed_sensing(design, responses, dims, config: PrsmConfig = PrsmConfig(),
                            init=None) -> FitResult:
    """Contractive PRSM for nuclear-norm penalized compressed sensing.

    Minimizes ``(1/N) ||Y - X theta||^2 + lam ||mat(theta)||_*`` where the
    rows of ``design`` are ``vec(X_i)`` (column-major). Each iteration does a
    ridge-type linear solve (factored once), a half multiplier step,
    singular value soft-thresholding and a second multiplier step. Stops when
    ``||theta_x - theta_y||_2 <= tol``; the estimate is ``mat(theta_y)``.

    Parameters
    ----------
    design : ndarray, shape (N, d1*d2)
    responses : ndarray, shape (N,)
        Already robustified responses, if robustness is wanted.
    dims : tuple of int
        ``(d1, d2)``.
    config : PrsmConfig
    init : ndarray, optional
        Starting value for ``Theta``.
    """
    A = np.asarray(design, dtype=float)
    Y = np.asarray(responses, dtype=float).ravel()
    d1, d2 = dims
    if A.ndim != 2 or A.shape[1] != d1 * d2:
        raise ValueError(f"design must be N x {d1 * d2}, got {A.shape}")
    if A.shape[0] != Y.shape[0]:
        raise ValueError("design and responses disagree on N")
    return _prsm(A, Y, (d1, d2), config, init)


def prsm_multitask(design, responses, config: PrsmConfig = PrsmConfig(), init=None) -> FitResult:
    """Contractive PRSM for nuclear-norm penalized multi-task regression.

    Minimizes ``(1/n) ||Y - X Theta||_F^2 + lam ||Theta||_*`` with ``X``
    n x d1 and ``Y`` n x d2. Stops on ``||Theta_x - Theta_y||_F <= tol``.
    """
    X = np.asarray(design, dtype=float)
    Y = np.asarray(responses, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("design and responses disagree on n")
    return _prsm(X, Y, (X.shape[1], Y.shape[1]), config, init)


def admm_matrix_completion(moments: SingletonCounts, config: AdmmConfig = AdmmConfig(),
                           callback=None) -> FitResult:
    """ADMM for max-norm constrained, nuclear-norm penalized matrix completion.

    Minimizes ``sum_jk (g_jk Theta_jk^2 - 2 c_jk Theta_jk) + lam ||Theta||_*``
    subject to ``|Theta_jk| <= box``, where ``g`` and ``c`` are the Gram
    diagonal and the cross moment of ``moments``; for the raw design this is
    ``(1/N) sum_i (Y_i - Theta_{j(i)k(i)})^2`` up to a constant.

    The nuclear norm is handled through the lifting
    ``[[W1, Theta], [Theta^T, W2]] >= 0``: ``L`` is the PSD block, ``R`` the
    block carrying the data term and the box, ``W`` the multiplier.
    Iterations stop when
    ``max(||L - R||_F, rho ||R_new - R_old||_F) / max(1, ||R||_F) <= tol``.

    Parameters
    ----------
    moments : SingletonCounts
    config : AdmmConfig
    callback : callable, optional
        Called as ``callback(k, L, R)`` after every iteration.
    """
    d1, d2 = moments.shape
    D = d1 + d2
    cross = moments.cross
    gdiag = moments.gram_diagonal
    rho, gamma, lam, box = config.rho, config.gamma, config.lam, config.box

    Rm = np.zeros((D, D))
    W = np.zeros((D, D))
    shift = lam * np.eye(D)
    converged = False
    resid = math.inf
    trace = []
    k = 0
    for k in range(1, config.max_iter + 1):
        M = Rm - (W + shift) / rho
        L = _psd_clip(0.5 * (M + M.T))
        C = L + W / rho
        R12 = np.clip((rho * C[:d1, d1:] + 2.0 * cross) / (rho + 2.0 * gdiag), -box, box)
        Rn = C.copy()
        Rn[:d1, d1:] = R12
        Rn[d1:, :d1] = R12.T
        W = W + gamma * rho * (L - Rn)
        primal = np.linalg.norm(L - Rn)
        dual = rho * np.linalg.norm(Rn - Rm)
        Rm = Rn
        resid = float(max(primal, dual) / max(1.0, np.linalg.norm(Rm)))
        if callback is not None:
            callback(k, L, Rm)
        if config.track_objective:
            trace.append(_mc_objective(R12, cross, gdiag, lam))
        if resid <= config.tol:
            converged = True
            break
    est = Rm[:d1, d1:].copy()
    return FitResult(est, k, resid, converged, _mc_objective(est, cross, gdiag, lam), trace)


def _mc_objective(T, cross, gdiag, lam):
    return float(np.sum(gdiag * T * T - 2.0 * cross * T) + lam * nuclear_norm(T))


def cd_lasso(gram, cross, config: CdConfig = CdConfig(), init=None) -> FitResult:
    """Cyclic coordinate descent for ``-c^T t + 1/2 t^T G t + lam ||t||_1``.

    Each coordinate is set to ``soft(c_j - sum_{k != j} G_jk t_k, lam) / G_jj``;
    sweeps stop once the largest coordinate change is at most ``tol``.
    Coordinates with ``G_jj = 0`` are pinned to zero; those whose gradient
    ``c_j`` is non-zero are listed in ``diagnostics["pinned"]``.
    """
    G = np.asarray(getattr(gram, "matrix", gram), dtype=float)
    c = np.asarray(cross, dtype=float).ravel()
    d = c.shape[0]
    if G.shape != (d, d):
        raise ValueError(f"gram must be {d} x {d}, got {G.shape}")
    lam = config.lam
    theta = np.zeros(d) if init is None else np.asarray(init, dtype=float).ravel().copy()
    diag = np.diag(G).copy()
    dead = diag <= 0
    theta[dead] = 0.0
    pinned = [int(j) for j in np.flatnonzero(dead & (c != 0))]
    # residual gradient r = c - G theta, kept up to date
    r = c - G @ theta
    converged = False
    max_change = math.inf
    trace = []
    k = 0
    live = np.flatnonzero(~dead)
    for k in range(1, config.max_iter + 1):
        max_change = 0.0
        for j in live:
            old = theta[j]
            z = r[j] + diag[j] * old
            new = math.copysign(max(abs(z) - lam, 0.0), z) / diag[j]
            if new != old:
                r -= G[:, j] * (new - old)
                theta[j] = new
                max_change = max(max_change, abs(new - old))
        trace.append(_lasso_objective(G, c, lam, theta))
        if max_change <= config.tol:
            converged = True
            break
    return FitResult(theta, k, max_change, converged, _lasso_objective(G, c, lam, theta),
                     trace, {"pinned": pinned})


def _lasso_objective(G, c, lam, theta):
    return float(-c @ theta + 0.5 * theta @ G @ theta + lam * np.abs(theta).sum())
