"""Command-line runner.

Examples
--------
::

    robust-trace simulate --preset figure2-lognormal --out runs/fig2 --reps 20
    robust-trace covariance-bench --preset figure5-t3 --out runs/fig5
    robust-trace --config run.toml --jobs 4
    robust-trace fit --config fit.toml --out runs/fit

Exit status is 0 on success, 2 for invalid configuration and 1 for any other
fatal error.
"""

from __future__ import annotations

import argparse
import logging
import math
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (COMMANDS, ConfigError, RunConfig, dump_resolved, load_config,
                     resolve_covariance, resolve_experiment, resolve_fit, validate)
from .datasets import DenseDesign, DiagonalDesign, MultiResponse, SingletonDesign
from .estimators import (LambdaRule, ProblemKind, ProblemSpec, ShrinkagePlan, default_shrinkage,
                         estimate, lambda_for)
from .presets import preset_names
from .simulation import (RNG_ALGORITHM, ErrorTable, covariance_benchmark, run_monte_carlo)
from .shrinkage import RateFormula
from .solvers import AdmmConfig, CdConfig, PrsmConfig

__all__ = ["build_parser", "config_from_args", "run", "main"]

logger = logging.getLogger("robust_trace")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="robust-trace",
        description="Robust low-rank trace regression: fits and Monte Carlo sweeps.",
        epilog="presets: " + ", ".join(preset_names()))
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="what to run (may also come from the config file)")
    p.add_argument("--config", type=Path, help="TOML configuration file")
    p.add_argument("--preset", help="named experiment preset")
    p.add_argument("--out", type=Path, help="output directory (default: out)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--reps", type=int, help="replications per grid point")
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--tau-const", type=float, help="threshold constant (inf disables shrinkage)")
    p.add_argument("--lambda-const", type=float, help="penalty constant")
    p.add_argument("--delta", type=float, help="confidence parameter delta")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtime_ms (output is then not reproducible)")
    p.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return p


def config_from_args(args) -> RunConfig:
    """Merge a config file (if any) with command-line overrides."""
    if args.config is not None:
        cfg = load_config(args.config)
        if args.command is not None and args.command != cfg.command:
            raise ConfigError(f"command: flag says {args.command!r}, "
                              f"config says {cfg.command!r}")
    else:
        if args.command is None:
            raise ConfigError("command: give a command or --config")
        cfg = RunConfig(command=args.command)
    overrides = {"preset": args.preset, "out": args.out, "seed": args.seed,
                 "replications": args.reps, "jobs": args.jobs,
                 "tau_constant": args.tau_const, "lambda_constant": args.lambda_const,
                 "delta": args.delta}
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.timing:
        overrides["timing"] = True
    if "preset" in overrides:
        # a preset on the command line replaces the config's own description
        overrides.update(experiment=None, covariance=None)
    return validate(replace(cfg, **overrides))


def _meta(cfg: RunConfig, extra_lines=()) -> str:
    head = [f"# robust_trace {__version__}",
            f"# python {platform.python_version()}, numpy {np.__version__}",
            f"# rng: {RNG_ALGORITHM}"]
    if cfg.preset:
        head.append(f"# expanded from preset {cfg.preset}")
    head.extend(f"# {line}" for line in extra_lines)
    return "\n".join(head) + "\n\n" + dump_resolved(cfg)


def _write(path: Path, text: str):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _realized_simulation(exp):
    lines = ["realized thresholds and penalties per grid point:"]
    for d, n in exp.grid:
        problem = exp.problem(d)
        for name, m in exp.methods():
            lam = lambda_for(problem, LambdaRule(m.lambda_constant, exp.delta), n)
            if m.tau_constant is None:
                tau = math.inf
            else:
                rule = default_shrinkage(problem, m.tau_constant, m.design_tau_constant).response
                tau = rule.threshold(n, d, d, exp.delta)
            lines.append(f"  d={d} n={n} {name}: tau={tau!r} lambda_N={lam!r}")
    return lines


def _simulate(cfg: RunConfig):
    exp = resolve_experiment(cfg)
    logger.info("simulate %s: %d grid points x %d replications", exp.kind.value,
                len(exp.grid), exp.replications)
    table = run_monte_carlo(exp, jobs=cfg.jobs)
    return table, _realized_simulation(exp)


def _covariance(cfg: RunConfig):
    bench = resolve_covariance(cfg)
    rows, lines = [], ["realized thresholds per grid point:"]
    for ratio in bench.d_over_n:
        logger.info("covariance bench d/n=%s", ratio)
        t = covariance_benchmark(ratio, bench.n_grid, bench.sample_law, bench.replications,
                                 bench.seed, bench.tau_constant, bench.delta,
                                 bench.moment_bound, record_runtime=cfg.timing)
        rows.extend(t.rows)
        for n in bench.n_grid:
            d = max(1, int(round(ratio * n)))
            tau = bench.tau_constant * RateFormula.QUARTER_NR_OVER_DELTA_LOG_D.evaluate(
                n, d, d, bench.delta, bench.moment_bound)
            lines.append(f"  d={d} n={n}: tau={tau!r}")
    return ErrorTable(rows, "spectral_error"), lines


def _load_fit_data(spec):
    try:
        with np.load(spec.input) as z:
            arrays = {k: z[k] for k in z.files}
    except (OSError, ValueError) as exc:
        raise ConfigError(f"fit.input: cannot load {spec.input}: {exc}") from None

    def need(*keys):
        missing = [k for k in keys if k not in arrays]
        if missing:
            raise ConfigError(f"fit.input: {spec.input} lacks arrays {', '.join(missing)}")
        return [arrays[k] for k in keys]

    if spec.kind is ProblemKind.LINEAR:
        return DiagonalDesign(*need("x", "Y"))
    if spec.kind is ProblemKind.COMPRESSED_SENSING:
        return DenseDesign(*need("X", "Y"))
    if spec.kind is ProblemKind.MULTI_TASK:
        return MultiResponse(*need("X", "Y"))
    rows, cols, Y = need("rows", "cols", "Y")
    d1, d2 = spec.shape
    return SingletonDesign(rows, cols, Y, (d1, d2), spec.singleton_scaling.factor(d1, d2))


def _fit(cfg: RunConfig):
    spec = resolve_fit(cfg)
    data = _load_fit_data(spec)
    problem = ProblemSpec(spec.kind, data.dims, spec.regime, spikiness=spec.spikiness,
                          singleton_scaling=spec.singleton_scaling)
    if math.isinf(spec.tau_constant):
        plan = ShrinkagePlan.standard()
    else:
        plan = default_shrinkage(problem, spec.tau_constant, spec.design_tau_constant)
    lam = spec.lam if spec.lam is not None else LambdaRule(spec.lambda_constant, cfg.delta)
    solver = {ProblemKind.LINEAR: CdConfig, ProblemKind.MATRIX_COMPLETION: AdmmConfig}.get(
        spec.kind, PrsmConfig)(tol=cfg.tol, max_iter=cfg.max_iter)
    res = estimate(problem, data, plan, lam, solver)
    est = np.atleast_2d(res.estimate)
    if spec.kind is ProblemKind.LINEAR:
        est = est.reshape(-1, 1)
    lines = [f"iterations: {res.iterations}", f"final_residual: {res.final_residual!r}",
             f"converged: {str(res.converged).lower()}"]
    lines += [f"{k}: {v!r}" for k, v in sorted(res.diagnostics.items())]
    return est, res.converged, lines


def run(cfg: RunConfig) -> int:
    """Execute ``cfg`` and write its outputs; return the exit status."""
    out = cfg.out
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        logger.error("cannot create output directory %s: %s", out, exc.strerror)
        return 1
    if cfg.command == "fit":
        est, converged, lines = _fit(cfg)
        np.savetxt(out / "estimate.csv", est, delimiter=",", fmt="%.17g", newline="\r\n")
        _write(out / "meta.txt", _meta(cfg, lines))
        if not converged:
            logger.warning("solver did not converge; see meta.txt")
        return 0
    if cfg.command == "simulate":
        table, lines = _simulate(cfg)
    else:
        table, lines = _covariance(cfg)
    table.to_csv(out / "errors.csv")
    table.summary_csv(out / "summary.csv")
    _write(out / "meta.txt", _meta(cfg, lines))
    failed = sum(not r.converged for r in table.rows)
    if failed:
        logger.warning("%d of %d fits did not converge", failed, len(table.rows))
    logger.info("wrote %s", out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"robust-trace: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, TypeError) as exc:
        print(f"robust-trace: error: {exc}", file=sys.stderr)
        return 1
