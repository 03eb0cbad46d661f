"""Run configuration for the command-line runner.

Configurations are TOML documents. A minimal simulation config is::

    command = "simulate"
    preset = "figure2-lognormal"

Top-level keys: ``command``, ``preset``, ``out``, ``seed``, ``replications``,
``jobs``, ``timing``. Tables: ``[constants]`` (``tau``, ``lambda``,
``delta``), ``[solver]`` (``tol``, ``max_iter``), and one of
``[experiment]``, ``[covariance]`` or ``[fit]`` describing the run when no
preset is named. Unknown keys are rejected.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import tomli_w

from .estimators import ProblemKind
from .moments import Regime, SingletonScaling
from .presets import COVARIANCE_PRESETS, PRESETS, CovariancePreset
from .simulation import (ExperimentSpec, MethodSpec, NoiseKind, NoiseModel, SampleLaw,
                         TargetNormalization)

__all__ = ["ConfigError", "RunConfig", "FitSpec", "COMMANDS", "parse_config", "load_config",
           "resolve_experiment", "resolve_covariance", "resolve_fit", "dump_resolved"]

COMMANDS = ("fit", "simulate", "covariance-bench")


class ConfigError(ValueError):
    """Malformed or invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class FitSpec:
    """What the ``fit`` command estimates from an ``.npz`` file."""

    input: Path
    kind: ProblemKind
    regime: Regime = Regime.SUB_GAUSSIAN_DESIGN
    spikiness: float | None = None
    singleton_scaling: SingletonScaling = SingletonScaling.RAW
    shape: tuple | None = None
    tau_constant: float = 1.0
    design_tau_constant: float | None = None
    lambda_constant: float = 1.0
    lam: float | None = None


@dataclass(frozen=True)
class RunConfig:
    command: str
    preset: str | None = None
    out: Path = Path("out")
    seed: int | None = None
    replications: int | None = None
    jobs: int = 1
    timing: bool = False
    tau_constant: float | None = None
    lambda_constant: float | None = None
    delta: float = 1.0
    tol: float = 1e-7
    max_iter: int = 10_000
    experiment: dict | None = None
    covariance: dict | None = None
    fit: dict | None = None
    source: str = field(default="<flags>", compare=False)


_TOP = {"command", "preset", "out", "seed", "replications", "jobs", "timing",
        "constants", "solver", "experiment", "covariance", "fit"}
_CONSTANTS = {"tau", "lambda", "delta"}
_SOLVER = {"tol", "max_iter"}
_EXPERIMENT = {"kind", "grid", "rank", "normalization", "regime", "spikiness",
               "singleton_scaling", "noise", "robust", "standard"}
_NOISE = {"kind", "sigma2", "divisor", "cap"}
_METHOD = {"tau_constant", "lambda_constant", "design_tau_constant"}
_COVARIANCE = {"sample_law", "d_over_n", "n_grid", "tau_constant", "delta", "moment_bound"}
_FIT = {"input", "kind", "regime", "spikiness", "singleton_scaling", "shape",
        "tau_constant", "design_tau_constant", "lambda_constant", "lambda"}


def _reject_unknown(table, allowed, prefix=""):
    if not isinstance(table, dict):
        raise ConfigError(f"{prefix.rstrip('.') or 'config'}: expected a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{prefix}{key}: unknown key")


def _number(value, key, *, positive=False, nonneg=False, integer=False, allow_inf=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if integer and not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ConfigError(f"{key}: must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{key}: must be positive, got {value!r}")
    if nonneg and not value >= 0:
        raise ConfigError(f"{key}: must be non-negative, got {value!r}")
    return value


def _enum(cls, value, key):
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(repr(m.value) for m in cls)
        raise ConfigError(f"{key}: expected one of {choices}, got {value!r}") from None


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse and validate a TOML configuration document."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message already carries "(at line L, column C)"
        raise ConfigError(f"{source}: parse error: {exc}") from None
    _reject_unknown(raw, _TOP)
    constants = raw.get("constants", {})
    solver = raw.get("solver", {})
    _reject_unknown(constants, _CONSTANTS, "constants.")
    _reject_unknown(solver, _SOLVER, "solver.")
    kwargs = {k: raw[k] for k in ("command", "preset", "out", "seed", "replications", "jobs",
                                  "timing", "experiment", "covariance", "fit") if k in raw}
    if "tau" in constants:
        kwargs["tau_constant"] = constants["tau"]
    if "lambda" in constants:
        kwargs["lambda_constant"] = constants["lambda"]
    if "delta" in constants:
        kwargs["delta"] = constants["delta"]
    kwargs.update({k: solver[k] for k in _SOLVER if k in solver})
    if "command" not in kwargs:
        raise ConfigError("command: missing required key")
    return validate(RunConfig(source=source, **kwargs))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, str(path))


def validate(cfg: RunConfig) -> RunConfig:
    """Check ranges and cross-field consistency; return ``cfg`` with ``out`` as a Path."""
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {cfg.command!r}")
    if cfg.seed is not None:
        _number(cfg.seed, "seed", nonneg=True, integer=True)
    if cfg.replications is not None:
        _number(cfg.replications, "replications", positive=True, integer=True)
    _number(cfg.jobs, "jobs", positive=True, integer=True)
    if not isinstance(cfg.timing, bool):
        raise ConfigError(f"timing: expected true or false, got {cfg.timing!r}")
    if cfg.tau_constant is not None:
        _number(cfg.tau_constant, "constants.tau", positive=True, allow_inf=True)
    if cfg.lambda_constant is not None:
        _number(cfg.lambda_constant, "constants.lambda", positive=True)
    _number(cfg.delta, "constants.delta", positive=True)
    _number(cfg.tol, "solver.tol", positive=True)
    _number(cfg.max_iter, "solver.max_iter", positive=True, integer=True)
    if not isinstance(cfg.out, (str, Path)):
        raise ConfigError(f"out: expected a path, got {cfg.out!r}")

    sections = {"simulate": "experiment", "covariance-bench": "covariance", "fit": "fit"}
    wanted = sections[cfg.command]
    for name in sections.values():
        if name != wanted and getattr(cfg, name) is not None:
            raise ConfigError(f"{name}: not allowed with command {cfg.command!r}")
    if cfg.preset is not None:
        if cfg.command == "fit":
            raise ConfigError("preset: the fit command takes no preset")
        pool = PRESETS if cfg.command == "simulate" else COVARIANCE_PRESETS
        if cfg.preset not in pool:
            raise ConfigError(f"preset: unknown preset {cfg.preset!r} for {cfg.command}; "
                              f"choose from {', '.join(sorted(pool))}")
        if getattr(cfg, wanted) is not None:
            raise ConfigError(f"{wanted}: give either a preset or a [{wanted}] table, not both")
    elif getattr(cfg, wanted) is None:
        raise ConfigError(f"{wanted}: {cfg.command} needs a preset or a [{wanted}] table")
    cfg = replace(cfg, out=Path(cfg.out))
    # resolve once so that every error surfaces at parse time
    if cfg.command == "simulate":
        resolve_experiment(cfg)
    elif cfg.command == "covariance-bench":
        resolve_covariance(cfg)
    else:
        resolve_fit(cfg)
    return cfg


def _noise_from_table(t) -> NoiseModel:
    _reject_unknown(t, _NOISE, "experiment.noise.")
    if "kind" not in t:
        raise ConfigError("experiment.noise.kind: missing required key")
    kind = _enum(NoiseKind, t["kind"], "experiment.noise.kind")
    args = {}
    for key in ("sigma2", "divisor", "cap"):
        if key in t:
            args[key] = _number(t[key], f"experiment.noise.{key}", positive=True,
                                allow_inf=key == "cap")
    return NoiseModel(kind, **args)


def _method_from_table(t, name, standard=False) -> MethodSpec:
    _reject_unknown(t, _METHOD, f"experiment.{name}.")
    tau = t.get("tau_constant")
    if standard and tau is not None:
        raise ConfigError(f"experiment.{name}.tau_constant: the standard method is unshrunk")
    if tau is not None:
        _number(tau, f"experiment.{name}.tau_constant", positive=True, allow_inf=True)
        tau = None if math.isinf(tau) else float(tau)
    elif not standard:
        tau = 1.0
    lam = _number(t.get("lambda_constant", 1.0), f"experiment.{name}.lambda_constant",
                  positive=True)
    dtau = t.get("design_tau_constant")
    if dtau is not None:
        _number(dtau, f"experiment.{name}.design_tau_constant", positive=True)
    return MethodSpec(tau, float(lam), dtau)


def _experiment_from_table(t) -> ExperimentSpec:
    _reject_unknown(t, _EXPERIMENT, "experiment.")
    for key in ("kind", "grid", "noise"):
        if key not in t:
            raise ConfigError(f"experiment.{key}: missing required key")
    kind = _enum(ProblemKind, t["kind"], "experiment.kind")
    grid = t["grid"]
    if (not isinstance(grid, list) or not grid
            or not all(isinstance(p, list) and len(p) == 2 for p in grid)):
        raise ConfigError("experiment.grid: expected a non-empty list of [d, n] pairs")
    for d, n in grid:
        _number(d, "experiment.grid", positive=True, integer=True)
        _number(n, "experiment.grid", positive=True, integer=True)
    rank = _number(t.get("rank", 5), "experiment.rank", positive=True, integer=True)
    if any(d < rank for d, _ in grid):
        raise ConfigError("experiment.grid: every d must be at least experiment.rank")
    spikiness = t.get("spikiness")
    if spikiness is not None:
        _number(spikiness, "experiment.spikiness", positive=True)
    if kind is ProblemKind.MATRIX_COMPLETION and spikiness is None:
        raise ConfigError("experiment.spikiness: required for matrix_completion")
    return ExperimentSpec(
        kind, tuple(tuple(p) for p in grid), _noise_from_table(t["noise"]),
        rank=rank,
        normalization=_enum(TargetNormalization, t.get("normalization", "unit_per_component"),
                            "experiment.normalization"),
        regime=_enum(Regime, t.get("regime", "sub_gaussian_design"), "experiment.regime"),
        spikiness=spikiness,
        singleton_scaling=_enum(SingletonScaling, t.get("singleton_scaling", "raw"),
                                "experiment.singleton_scaling"),
        robust=_method_from_table(t.get("robust", {}), "robust"),
        standard=_method_from_table(t.get("standard", {}), "standard", standard=True))


def resolve_experiment(cfg: RunConfig) -> ExperimentSpec:
    """The ExperimentSpec a ``simulate`` run executes, overrides applied."""
    exp = PRESETS[cfg.preset] if cfg.preset else _experiment_from_table(cfg.experiment)
    robust, standard = exp.robust, exp.standard
    if cfg.tau_constant is not None:
        tau = None if math.isinf(cfg.tau_constant) else float(cfg.tau_constant)
        robust = replace(robust, tau_constant=tau)
    if cfg.lambda_constant is not None:
        robust = replace(robust, lambda_constant=float(cfg.lambda_constant))
        standard = replace(standard, lambda_constant=float(cfg.lambda_constant))
    changes = dict(robust=robust, standard=standard, delta=float(cfg.delta),
                   tol=float(cfg.tol), max_iter=int(cfg.max_iter), record_runtime=cfg.timing)
    if cfg.seed is not None:
        changes["base_seed"] = int(cfg.seed)
    if cfg.replications is not None:
        changes["replications"] = int(cfg.replications)
    return replace(exp, **changes)


def resolve_covariance(cfg: RunConfig) -> CovariancePreset:
    """The CovariancePreset a ``covariance-bench`` run executes, overrides applied."""
    if cfg.preset:
        bench = COVARIANCE_PRESETS[cfg.preset]
    else:
        t = cfg.covariance
        _reject_unknown(t, _COVARIANCE, "covariance.")
        if "sample_law" not in t:
            raise ConfigError("covariance.sample_law: missing required key")
        args = {"sample_law": _enum(SampleLaw, t["sample_law"], "covariance.sample_law")}
        for key in ("d_over_n", "n_grid"):
            if key in t:
                vals = t[key]
                if not isinstance(vals, list) or not vals:
                    raise ConfigError(f"covariance.{key}: expected a non-empty list")
                for v in vals:
                    _number(v, f"covariance.{key}", positive=True, integer=key == "n_grid")
                args[key] = tuple(vals)
        for key in ("tau_constant", "delta", "moment_bound"):
            if key in t:
                args[key] = float(_number(t[key], f"covariance.{key}", positive=True))
        bench = CovariancePreset(**args)
    changes = {}
    if cfg.seed is not None:
        changes["seed"] = int(cfg.seed)
    if cfg.replications is not None:
        changes["replications"] = int(cfg.replications)
    if cfg.tau_constant is not None:
        if math.isinf(cfg.tau_constant):
            raise ConfigError("constants.tau: the covariance benchmark needs a finite constant")
        changes["tau_constant"] = float(cfg.tau_constant)
    if cfg.delta != 1.0:
        changes["delta"] = float(cfg.delta)
    return replace(bench, **changes)


def resolve_fit(cfg: RunConfig) -> FitSpec:
    """The FitSpec a ``fit`` run executes, overrides applied."""
    t = cfg.fit
    _reject_unknown(t, _FIT, "fit.")
    for key in ("input", "kind"):
        if key not in t:
            raise ConfigError(f"fit.{key}: missing required key")
    if not isinstance(t["input"], str):
        raise ConfigError(f"fit.input: expected a path, got {t['input']!r}")
    kind = _enum(ProblemKind, t["kind"], "fit.kind")
    args = dict(input=Path(t["input"]), kind=kind,
                regime=_enum(Regime, t.get("regime", "sub_gaussian_design"), "fit.regime"),
                singleton_scaling=_enum(SingletonScaling, t.get("singleton_scaling", "raw"),
                                        "fit.singleton_scaling"))
    if "spikiness" in t:
        args["spikiness"] = float(_number(t["spikiness"], "fit.spikiness", positive=True))
    elif kind is ProblemKind.MATRIX_COMPLETION:
        raise ConfigError("fit.spikiness: required for matrix_completion")
    if "shape" in t:
        shape = t["shape"]
        if not isinstance(shape, list) or len(shape) != 2:
            raise ConfigError("fit.shape: expected [d1, d2]")
        for s in shape:
            _number(s, "fit.shape", positive=True, integer=True)
        args["shape"] = tuple(shape)
    elif kind is ProblemKind.MATRIX_COMPLETION:
        raise ConfigError("fit.shape: required for matrix_completion")
    if "tau_constant" in t:
        args["tau_constant"] = float(_number(t["tau_constant"], "fit.tau_constant",
                                             positive=True, allow_inf=True))
    if "design_tau_constant" in t:
        args["design_tau_constant"] = float(_number(t["design_tau_constant"],
                                                    "fit.design_tau_constant", positive=True))
    if "lambda_constant" in t:
        args["lambda_constant"] = float(_number(t["lambda_constant"], "fit.lambda_constant",
                                                positive=True))
    if "lambda" in t:
        args["lam"] = float(_number(t["lambda"], "fit.lambda", nonneg=True))
    spec = FitSpec(**args)
    if cfg.tau_constant is not None:
        spec = replace(spec, tau_constant=float(cfg.tau_constant))
    if cfg.lambda_constant is not None:
        spec = replace(spec, lambda_constant=float(cfg.lambda_constant), lam=None)
    return spec


def _method_table(m: MethodSpec, standard=False) -> dict:
    out = {"lambda_constant": m.lambda_constant}
    if not standard:
        out["tau_constant"] = math.inf if m.tau_constant is None else m.tau_constant
        if m.design_tau_constant is not None:
            out["design_tau_constant"] = m.design_tau_constant
    return out


def dump_resolved(cfg: RunConfig) -> str:
    """TOML for ``cfg`` with presets and overrides expanded.

    Parsing the result with :func:`parse_config` reproduces the same run.
    """
    doc = {"command": cfg.command, "out": str(cfg.out), "jobs": cfg.jobs, "timing": cfg.timing}
    if cfg.command == "simulate":
        exp = resolve_experiment(cfg)
        doc.update(seed=exp.base_seed, replications=exp.replications)
        doc["constants"] = {"delta": exp.delta}
        doc["solver"] = {"tol": exp.tol, "max_iter": exp.max_iter}
        table = {"kind": exp.kind.value, "grid": [list(p) for p in exp.grid], "rank": exp.rank,
                 "normalization": exp.normalization.value, "regime": exp.regime.value,
                 "singleton_scaling": exp.singleton_scaling.value,
                 "noise": exp.noise.describe(),
                 "robust": _method_table(exp.robust),
                 "standard": _method_table(exp.standard, standard=True)}
        if exp.spikiness is not None:
            table["spikiness"] = exp.spikiness
        doc["experiment"] = table
    elif cfg.command == "covariance-bench":
        bench = resolve_covariance(cfg)
        doc.update(seed=bench.seed, replications=bench.replications)
        doc["covariance"] = {"sample_law": bench.sample_law.value,
                             "d_over_n": list(bench.d_over_n), "n_grid": list(bench.n_grid),
                             "tau_constant": bench.tau_constant, "delta": bench.delta,
                             "moment_bound": bench.moment_bound}
    else:
        spec = resolve_fit(cfg)
        doc["constants"] = {"delta": cfg.delta}
        doc["solver"] = {"tol": cfg.tol, "max_iter": cfg.max_iter}
        table = {"input": str(spec.input), "kind": spec.kind.value, "regime": spec.regime.value,
                 "singleton_scaling": spec.singleton_scaling.value,
                 "tau_constant": spec.tau_constant, "lambda_constant": spec.lambda_constant}
        for key, value in (("spikiness", spec.spikiness), ("shape", spec.shape),
                           ("design_tau_constant", spec.design_tau_constant),
                           ("lambda", spec.lam)):
            if value is not None:
                table[key] = list(value) if key == "shape" else value
        doc["fit"] = table
    return tomli_w.dumps(doc)
