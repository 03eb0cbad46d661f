"""Synthetic data generators and the Monte Carlo harness.

Every generator is a pure function of its parameters and a seed. Random
numbers come from NumPy's ``Generator`` with the PCG64 bit generator; the
seed of replication ``r`` is derived from ``base_seed + r`` together with the
grid point, so tables do not depend on execution order.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .datasets import DenseDesign, DiagonalDesign, MultiResponse, SingletonDesign, TraceDataset
from .estimators import (LambdaRule, ProblemKind, ProblemSpec, ShrinkagePlan, default_shrinkage,
                         estimate)
from .moments import Regime, SingletonScaling, sample_second_moment, shrinkage_covariance
from .shrinkage import RateFormula
from .solvers import AdmmConfig, CdConfig, PrsmConfig

__all__ = [
    "RNG_ALGORITHM",
    "NoiseKind",
    "NoiseModel",
    "NOISE_PRESETS",
    "TargetNormalization",
    "make_low_rank_target",
    "sample_noise",
    "generate_dataset",
    "MethodSpec",
    "ExperimentSpec",
    "ErrorRow",
    "ErrorTable",
    "run_monte_carlo",
    "SampleLaw",
    "draw_covariance_samples",
    "covariance_benchmark",
]

logger = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.Generator(PCG64) seeded via SeedSequence"


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class NoiseKind(Enum):
    LOGNORMAL = "lognormal"
    TRUNC_CAUCHY = "trunc_cauchy"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class NoiseModel:
    """Noise distribution.

    * ``LOGNORMAL``: ``(Z - E Z) / divisor`` with ``Z ~ lnN(0, sigma2)``,
    * ``TRUNC_CAUCHY``: ``min(Z, cap) / divisor`` with ``Z`` standard Cauchy
      (capped above only, hence not centered),
    * ``GAUSSIAN``: ``N(0, sigma2)``.
    """

    kind: NoiseKind
    sigma2: float = 0.25
    divisor: float = 1.0
    cap: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not self.divisor > 0:
            raise ValueError("divisor must be positive")
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be non-negative")

    @classmethod
    def lognormal(cls, sigma2, divisor):
        return cls(NoiseKind.LOGNORMAL, sigma2=sigma2, divisor=divisor)

    @classmethod
    def trunc_cauchy(cls, cap, divisor):
        return cls(NoiseKind.TRUNC_CAUCHY, divisor=divisor, cap=cap)

    @classmethod
    def gaussian(cls, sigma2):
        return cls(NoiseKind.GAUSSIAN, sigma2=sigma2)

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is not NoiseKind.TRUNC_CAUCHY:
            out["sigma2"] = self.sigma2
        if self.kind is not NoiseKind.GAUSSIAN:
            out["divisor"] = self.divisor
        if self.kind is NoiseKind.TRUNC_CAUCHY:
            out["cap"] = self.cap
        return out


NOISE_PRESETS = {
    ProblemKind.COMPRESSED_SENSING: {
        "lognormal": NoiseModel.lognormal(6.25, 50.0),
        "cauchy": NoiseModel.trunc_cauchy(1e3, 10.0),
        "gaussian": NoiseModel.gaussian(0.25),
    },
    ProblemKind.MATRIX_COMPLETION: {
        "lognormal": NoiseModel.lognormal(9.0, 250.0),
        "cauchy": NoiseModel.trunc_cauchy(1e3, 16.0),
        "gaussian": NoiseModel.gaussian(0.25),
    },
    ProblemKind.MULTI_TASK: {
        "lognormal": NoiseModel.lognormal(4.0, 50.0),
        "cauchy": NoiseModel.trunc_cauchy(1e4, 10.0),
        "gaussian": NoiseModel.gaussian(0.25),
    },
}


def sample_noise(model: NoiseModel, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` i.i.d. noise values from ``model``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = _rng(seed)
    if model.kind is NoiseKind.LOGNORMAL:
        z = rng.lognormal(0.0, math.sqrt(model.sigma2), count)
        return (z - math.exp(model.sigma2 / 2.0)) / model.divisor
    if model.kind is NoiseKind.TRUNC_CAUCHY:
        return np.minimum(rng.standard_cauchy(count), model.cap) / model.divisor
    return rng.normal(0.0, math.sqrt(model.sigma2), count)


class TargetNormalization(Enum):
    #: ``sum_i v_i v_i^T``; Frobenius norm ``sqrt(rank)``.
    UNIT_PER_COMPONENT = "unit_per_component"
    #: ``sum_i v_i v_i^T / sqrt(5)``; unit Frobenius norm for rank 5.
    INV_SQRT5 = "inv_sqrt5"


def make_low_rank_target(d: int, rank: int = 5,
                         normalization=TargetNormalization.UNIT_PER_COMPONENT,
                         seed=None) -> np.ndarray:
    """Symmetric PSD rank-``rank`` target built from random eigenvectors.

    Draws 100 standard Gaussian vectors in R^d, takes the top ``rank``
    eigenvectors ``v_i`` of their sample covariance and returns
    ``sum v_i v_i^T`` (divided by ``sqrt(5)`` under ``INV_SQRT5``).
    """
    if rank < 1 or d < rank:
        raise ValueError(f"need 1 <= rank <= d, got rank={rank}, d={d}")
    rng = _rng(seed)
    G = rng.standard_normal((100, d))
    _, V = np.linalg.eigh(G.T @ G / 100)
    top = V[:, ::-1][:, :rank]
    theta = top @ top.T
    if TargetNormalization(normalization) is TargetNormalization.INV_SQRT5:
        theta = theta / math.sqrt(5.0)
    return theta


def generate_dataset(spec: ProblemSpec, theta, noise: NoiseModel, samples: int,
                     seed=None) -> TraceDataset:
    """Draw ``samples`` observations from the trace-regression model.

    Design laws: i.i.d. standard Gaussian vectors (linear), matrices with
    i.i.d. standard Gaussian entries (compressed sensing), uniformly sampled
    singletons scaled per ``spec.singleton_scaling`` (matrix completion), and
    N(0, I) covariate rows (multi-task, where ``samples`` is ``n``).
    """
    rng = _rng(seed)
    theta = np.asarray(theta, dtype=float)
    d1, d2 = spec.dims
    kind = spec.kind
    if kind is ProblemKind.LINEAR:
        coef = np.diag(theta) if theta.ndim == 2 else theta
        if coef.shape != (d1,):
            raise ValueError(f"theta does not match dims {spec.dims}")
        x = rng.standard_normal((samples, d1))
        return DiagonalDesign(x, x @ coef + sample_noise(noise, samples, rng))
    if theta.shape != (d1, d2):
        raise ValueError(f"theta has shape {theta.shape}, spec dims are {spec.dims}")
    if kind is ProblemKind.COMPRESSED_SENSING:
        X = rng.standard_normal((samples, d1, d2))
        signal = np.einsum("nij,ij->n", X, theta)
        return DenseDesign(X, signal + sample_noise(noise, samples, rng))
    if kind is ProblemKind.MATRIX_COMPLETION:
        scale = spec.singleton_scaling.factor(d1, d2)
        flat = rng.integers(0, d1 * d2, samples)
        rows, cols = np.divmod(flat, d2)
        Y = scale * theta[rows, cols] + sample_noise(noise, samples, rng)
        return SingletonDesign(rows, cols, Y, (d1, d2), scale)
    X = rng.standard_normal((samples, d1))
    E = sample_noise(noise, samples * d2, rng).reshape(samples, d2)
    return MultiResponse(X, X @ theta + E)


@dataclass(frozen=True)
class MethodSpec:
    """Estimator configuration in an experiment.

    ``tau_constant=None`` disables shrinkage (the standard estimator).
    """

    tau_constant: float | None = None
    lambda_constant: float = 1.0
    design_tau_constant: float | None = None


@dataclass(frozen=True)
class ExperimentSpec:
    """Robust-versus-standard Monte Carlo experiment.

    ``grid`` lists ``(d, samples)`` pairs with ``d1 = d2 = d``; ``samples``
    is ``N`` except for multi-task regression, where it is ``n``. The target
    for dimension ``d`` is drawn once from ``base_seed``; replication ``r``
    draws its data from ``base_seed + r``.
    """

    kind: ProblemKind
    grid: tuple
    noise: NoiseModel
    replications: int = 100
    base_seed: int = 0
    robust: MethodSpec = MethodSpec(tau_constant=1.0)
    standard: MethodSpec = MethodSpec()
    rank: int = 5
    normalization: TargetNormalization = TargetNormalization.UNIT_PER_COMPONENT
    regime: Regime = Regime.SUB_GAUSSIAN_DESIGN
    spikiness: float | None = None
    singleton_scaling: SingletonScaling = SingletonScaling.RAW
    delta: float = 1.0
    tol: float = 1e-7
    max_iter: int = 10_000
    record_runtime: bool = False

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple((int(d), int(n)) for d, n in self.grid))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.grid:
            raise ValueError("grid must not be empty")

    def problem(self, d) -> ProblemSpec:
        return ProblemSpec(self.kind, (d, d), self.regime, spikiness=self.spikiness,
                           schatten_radius=float(self.rank),
                           singleton_scaling=self.singleton_scaling)

    def methods(self):
        return (("robust", self.robust), ("standard", self.standard))

    def solver_config(self):
        if self.kind is ProblemKind.LINEAR:
            return CdConfig(tol=self.tol, max_iter=self.max_iter)
        if self.kind is ProblemKind.MATRIX_COMPLETION:
            return AdmmConfig(tol=self.tol, max_iter=self.max_iter)
        return PrsmConfig(tol=self.tol, max_iter=self.max_iter)


@dataclass(frozen=True, order=True)
class ErrorRow:
    d: int
    n: int
    replication: int
    method: str
    error: float
    runtime_ms: float = 0.0
    converged: bool = True


@dataclass
class ErrorTable:
    """Replication-level errors, canonically sorted by (d, n, replication, method)."""

    rows: list
    metric: str = "frobenius_error"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda r: (r.d, r.n, r.replication, r.method))

    @property
    def header(self):
        return ["d", "n", "replication", "method", self.metric, "runtime_ms", "converged"]

    def to_csv(self, path=None) -> str:
        """Write RFC 4180 CSV (CRLF line endings) and return it as a string."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([r.d, r.n, r.replication, r.method, repr(float(r.error)),
                        f"{r.runtime_ms:.3f}", "true" if r.converged else "false"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def grid_points(self):
        return sorted({(r.d, r.n) for r in self.rows})

    def errors(self, method, d, n) -> np.ndarray:
        return np.array([r.error for r in self.rows
                         if r.method == method and r.d == d and r.n == n])

    def medians(self, method) -> dict:
        return {pt: float(np.median(self.errors(method, *pt))) for pt in self.grid_points()}

    def summary(self) -> list:
        """Median and quartiles per grid point and method."""
        out = []
        for d, n in self.grid_points():
            for method in sorted({r.method for r in self.rows}):
                sel = [r for r in self.rows if r.d == d and r.n == n and r.method == method]
                if not sel:
                    continue
                e = np.array([r.error for r in sel])
                q1, med, q3 = np.percentile(e, [25, 50, 75])
                out.append({"d": d, "n": n, "method": method, "median": float(med),
                            "q1": float(q1), "q3": float(q3), "replications": len(sel),
                            "nonconverged": sum(not r.converged for r in sel)})
        return out

    def summary_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        cols = ["d", "n", "method", "median", "q1", "q3", "replications", "nonconverged"]
        w.writerow(cols)
        for s in self.summary():
            w.writerow([s[c] if not isinstance(s[c], float) else repr(s[c]) for c in cols])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _target(exp: ExperimentSpec, d):
    seed = np.random.SeedSequence([exp.base_seed, d, 0])
    return make_low_rank_target(d, exp.rank, exp.normalization, seed)


def _fit_method(exp, problem, data, method: MethodSpec):
    if method.tau_constant is None:
        plan = ShrinkagePlan.standard()
    else:
        plan = default_shrinkage(problem, method.tau_constant, method.design_tau_constant)
    rule = LambdaRule(method.lambda_constant, exp.delta)
    return estimate(problem, data, plan, rule, exp.solver_config())


def _run_cell(exp: ExperimentSpec, d: int, n: int, rep: int) -> list:
    problem = exp.problem(d)
    theta = _target(exp, d)
    rng = np.random.default_rng(np.random.SeedSequence([exp.base_seed + rep, d, n]))
    data = generate_dataset(problem, theta, exp.noise, n, rng)
    if exp.kind is ProblemKind.LINEAR:
        theta = np.diag(theta)
    rows = []
    for name, method in exp.methods():
        t0 = time.perf_counter()
        try:
            fit = _fit_method(exp, problem, data, method)
            err, ok = float(np.linalg.norm(fit.estimate - theta)), fit.converged
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("fit failed at d=%d n=%d rep=%d (%s): %s", d, n, rep, name, exc)
            err, ok = math.nan, False
        ms = (time.perf_counter() - t0) * 1e3 if exp.record_runtime else 0.0
        rows.append(ErrorRow(d, n, rep, name, err, ms, ok))
    return rows


def _run_cell_args(args):
    return _run_cell(*args)


def run_monte_carlo(exp: ExperimentSpec, jobs: int = 1) -> ErrorTable:
    """Fit robust and standard estimators on every grid point and replication.

    Failed fits are recorded as non-converged rows with a NaN error; they
    never abort the sweep. With ``jobs > 1`` replications are spread over a
    process pool; the table is identical either way.
    """
    tasks = [(exp, d, n, r) for d, n in exp.grid for r in range(exp.replications)]
    rows = []
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            for out in pool.map(_run_cell_args, tasks, chunksize=max(1, len(tasks) // (4 * jobs))):
                rows.extend(out)
    else:
        last = None
        for task in tasks:
            if task[1:3] != last:
                last = task[1:3]
                logger.info("grid point d=%d n=%d", *last)
            rows.extend(_run_cell(*task))
    return ErrorTable(rows, "frobenius_error")


class SampleLaw(Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T3 = "t3"


def draw_covariance_samples(law, n: int, d: int, seed=None) -> np.ndarray:
    """``n`` mean-zero samples in R^d with covariance ``diag(4, 1, ..., 1)``.

    Student t_3 draws are divided by sqrt(3) so that their covariance, not
    three times it, matches the target.
    """
    rng = _rng(seed)
    sd = np.ones(d)
    sd[0] = 2.0
    if SampleLaw(law) is SampleLaw.GAUSSIAN:
        z = rng.standard_normal((n, d))
    else:
        # t3 has variance 3
        z = rng.standard_t(3, (n, d)) / math.sqrt(3.0)
    return z * sd


def covariance_benchmark(d_over_n: float, n_grid, sample_law=SampleLaw.STUDENT_T3,
                         replications: int = 200, seed: int = 0, tau_constant: float = 1.0,
                         delta: float = 1.0, moment_bound: float = 1.0,
                         tau: float | None = None, record_runtime: bool = False) -> ErrorTable:
    """Spectral-norm error of the classical and l4-shrinkage covariance.

    The population covariance is ``diag(4, 1, ..., 1)`` with ``d =
    round(d_over_n * n)``. The shrinkage threshold is
    ``tau_constant * (n R / (delta log d))^(1/4)`` with ``R = moment_bound``
    unless ``tau`` fixes it (``d = 1`` gives an infinite threshold). Method
    ``robust`` is the shrinkage estimator, ``standard`` the sample second
    moment.
    """
    rows = []
    for n in n_grid:
        n = int(n)
        d = max(1, int(round(d_over_n * n)))
        sigma = np.ones(d)
        sigma[0] = 4.0
        if tau is None and d < 2:
            # log d = 0 makes the rate infinite: no shrinkage
            t = math.inf
        elif tau is None:
            t = tau_constant * RateFormula.QUARTER_NR_OVER_DELTA_LOG_D.evaluate(
                n, d, d, delta, moment_bound)
        else:
            t = float(tau)
        for rep in range(replications):
            rng = np.random.default_rng(np.random.SeedSequence([seed + rep, d, n]))
            x = draw_covariance_samples(sample_law, n, d, rng)
            for name, fn in (("robust", lambda s: shrinkage_covariance(s, t)),
                             ("standard", sample_second_moment)):
                t0 = time.perf_counter()
                diff = fn(x) - np.diag(sigma)
                err = float(np.abs(np.linalg.eigvalsh(diff)).max())
                ms = (time.perf_counter() - t0) * 1e3 if record_runtime else 0.0
                rows.append(ErrorRow(d, n, rep, name, err, ms, True))
    return ErrorTable(rows, "spectral_error")
