"""Command-line front end.

Subcommands: fit, solve, tilt, sample, error-exp, bench.  All JSON
outputs are versioned ("schema": "hop/v1") and embed a run manifest
(command, config digest, input digests, seed, version, timestamp); CSV
outputs get a sidecar <out>.manifest.json.

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 numerical
failure.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__, experiments
from .data_io import (SCHEMA, file_digest, json_digest, load_params,
                      read_returns_csv, save_params, write_returns_csv)
from .exceptions import (DataError, DomainError, HopError, IllPosedError,
                         SizeError)
from .fitting import FitConfig, fit, normalized_loglik
from .model import sample_returns
from .solver import MvskObjective, SolverConfig, crra_lambdas, solve
from .tilting import TiltingObjective, TiltingSpec, solve_tilting

_INPUT_ERRORS = (DataError, SizeError, DomainError, IllPosedError,
                 OSError, json.JSONDecodeError, ValueError)


def _manifest(command: str, config_obj, input_paths, seed) -> dict:
    return {
        "command": command,
        "config_digest": json_digest(config_obj),
        "input_digests": {str(p): file_digest(p) for p in input_paths},
        "seed": seed,
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(),
    }


def _write_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _write_csv(rows: list[dict], fieldnames, path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def _load_config(path) -> dict:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise DataError(f"{path}: config must be a JSON object")
    return doc


def _exit_codes(fn):
    """Map library exceptions onto the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _INPUT_ERRORS as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(2)
        except HopError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(4)

    return wrapper


def _solver_config(config: dict, mode: str | None = None,
                   max_iter: int | None = None) -> SolverConfig:
    allowed = {"eta", "eta0", "beta", "rel_tol", "max_iter", "mode",
               "use_fast_kernel"}
    bad = set(config) - allowed
    if bad:
        raise DataError(f"unknown solver config keys: {sorted(bad)}")
    merged = dict(config)
    if mode is not None:
        merged["mode"] = mode
    if max_iter is not None:
        merged["max_iter"] = max_iter
    return SolverConfig(**merged)


@click.group()
@click.version_option(__version__)
def main():
    """MVSK portfolio design under a skew-t return model."""


@main.command("fit")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="fit configuration JSON")
@click.option("--out", default="params.json", show_default=True,
              help="fitted parameter JSON")
@click.option("--report-out", default=None,
              help="fit report JSON (default: <out stem>_fit_report.json)")
@_exit_codes
def cmd_fit(csv_path, config_path, out, report_out):
    """Fit the skew-t model to a returns CSV by EM."""
    config = _load_config(config_path)
    returns = read_returns_csv(csv_path)
    cfg = FitConfig(**config)
    report = fit(returns, cfg)
    save_params(report.params, out)

    manifest = _manifest(
        "fit", config, [csv_path] + ([config_path] if config_path else []),
        seed=None)
    if report_out is None:
        stem = Path(out)
        report_out = stem.with_name(stem.stem + "_fit_report.json")
    doc = {
        "schema": SCHEMA,
        **report.to_dict(),
        "normalized_loglik": normalized_loglik(returns, report.params),
        "manifest": manifest,
    }
    _write_json(doc, report_out)
    click.echo(f"fit: {report.iterations} iterations, "
               f"loglik {report.loglik_trace[-1]:.6f}, "
               f"params -> {out}, report -> {report_out}")
    if not report.converged:
        sys.exit(3)


def _parse_lambdas(xi, lambdas):
    if (xi is None) == (lambdas is None):
        raise DataError("provide exactly one of --xi or --lambdas")
    if xi is not None:
        return crra_lambdas(xi)
    parts = [float(v) for v in lambdas.split(",")]
    if len(parts) != 4:
        raise DataError("--lambdas needs four comma-separated values")
    return tuple(parts)


@main.command("solve")
@click.argument("params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--xi", type=float, default=None,
              help="risk-aversion level; sets the four moment weights")
@click.option("--lambdas", default=None,
              help="four comma-separated moment weights, e.g. 1,5,18.3,55")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="solver configuration JSON")
@click.option("--mode", type=click.Choice(["rfpa", "pgd"]), default=None)
@click.option("--max-iter", type=int, default=None)
@click.option("--out", default="solution.json", show_default=True)
@_exit_codes
def cmd_solve(params_path, xi, lambdas, config_path, mode, max_iter, out):
    """Solve the MVSK design problem for a parameter JSON."""
    config = _load_config(config_path)
    lam = _parse_lambdas(xi, lambdas)
    params = load_params(params_path)
    cfg = _solver_config(config, mode=mode, max_iter=max_iter)
    obj = MvskObjective(lam, params=params)
    w0 = np.full(params.n_assets, 1.0 / params.n_assets)
    report = solve(w0, obj, cfg)

    manifest = _manifest(
        "solve", {"lambdas": list(lam), **config},
        [params_path] + ([config_path] if config_path else []), seed=None)
    doc = {"schema": SCHEMA, "lambdas": list(lam), **report.to_dict(),
           "manifest": manifest}
    _write_json(doc, out)
    click.echo(f"solve: {report.iterations} iterations, "
               f"objective {report.objective_trace[-1]:.10g} -> {out}")
    if not report.converged:
        sys.exit(3)


@main.command("tilt")
@click.argument("params_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="solver configuration JSON")
@click.option("--max-iter", type=int, default=None)
@click.option("--out", default="solution.json", show_default=True)
@_exit_codes
def cmd_tilt(params_path, spec_path, config_path, max_iter, out):
    """Tilt a reference portfolio toward better moments.

    The spec JSON holds w0 plus optional d, lambda, p, t.
    """
    config = _load_config(config_path)
    params = load_params(params_path)
    spec_doc = json.loads(Path(spec_path).read_text())
    w0_doc = spec_doc["w0"]
    if w0_doc == "uniform":
        n = params.n_assets
        w0_doc = [1.0 / n] * n
    spec = TiltingSpec(
        w0=np.asarray(w0_doc, dtype=float),
        d=np.asarray(spec_doc.get("d", [1.0] * 4), dtype=float),
        lam=float(spec_doc.get("lambda", 0.0)),
        p=int(spec_doc.get("p", 8)),
        t=spec_doc.get("t"),
    )
    cfg = _solver_config(config, max_iter=max_iter)
    obj = TiltingObjective(params, spec)
    report = solve_tilting(spec.w0, obj, cfg)

    manifest = _manifest("tilt", config, [params_path, spec_path], seed=None)
    doc = {"schema": SCHEMA, **report.to_dict(), "manifest": manifest}
    _write_json(doc, out)
    click.echo(f"tilt: {report.iterations} iterations, "
               f"delta {report.extras['tilting']['delta_achieved']:.6g} "
               f"-> {out}")
    if not report.converged:
        sys.exit(3)


@main.command("sample")
@click.argument("params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="returns.csv", show_default=True)
@_exit_codes
def cmd_sample(params_path, count, seed, out):
    """Draw synthetic returns from a parameter JSON."""
    if count < 0:
        raise DataError("--count must be non-negative")
    params = load_params(params_path)
    returns = sample_returns(params, count, seed=seed)
    write_returns_csv(returns, out)
    manifest = _manifest("sample", {"count": count}, [params_path], seed)
    _write_json({"schema": SCHEMA, "manifest": manifest},
                str(out) + ".manifest.json")
    click.echo(f"sample: {count} rows -> {out}")


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DataError(f"--n-list must be comma-separated integers: {text!r}")
    if not values or any(v < 2 for v in values):
        raise DataError("--n-list entries must be integers >= 2")
    return values


@main.command("error-exp")
@click.option("--n-list", default="10,20", show_default=True)
@click.option("--reps", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="errors.csv", show_default=True)
@_exit_codes
def cmd_error_experiment(n_list, reps, seed, out):
    """Compare non-parametric and fitted-parametric design errors."""
    ns = _parse_n_list(n_list)
    rows = experiments.error_experiment(ns, reps, seed=seed)
    _write_csv(
        [{"n": r.n, "replicate": r.replicate,
          "eps_np": repr(r.eps_np), "eps_st": repr(r.eps_st)}
         for r in rows],
        ["n", "replicate", "eps_np", "eps_st"], out)
    manifest = _manifest("error-exp", {"n_list": ns, "reps": reps}, [], seed)
    summary = {
        "schema": SCHEMA,
        "medians": {
            str(n): {
                "eps_np": float(np.median([r.eps_np for r in rows
                                           if r.n == n])),
                "eps_st": float(np.median([r.eps_st for r in rows
                                           if r.n == n])),
            } for n in ns
        },
        "manifest": manifest,
    }
    _write_json(summary, str(out) + ".manifest.json")
    for n, med in summary["medians"].items():
        click.echo(f"N={n}: median eps_np={med['eps_np']:.6g} "
                   f"eps_st={med['eps_st']:.6g}")
    click.echo(f"error-exp: {len(rows)} rows -> {out}")


@main.command("bench")
@click.option("--n-list", default="50,100,200,400", show_default=True)
@click.option("--reps", type=int, default=5, show_default=True)
@click.option("--mode", type=click.Choice(["rfpa", "pgd"]), default="rfpa",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default="bench.csv", show_default=True)
@_exit_codes
def cmd_bench(n_list, reps, mode, seed, out):
    """Time solves over a dimension grid and fit the log-log slope."""
    ns = _parse_n_list(n_list)
    rows, medians, slope = experiments.bench(ns, reps, mode=mode, seed=seed)
    _write_csv(
        [{"n": r.n, "replicate": r.replicate, "seconds": repr(r.seconds),
          "iterations": r.iterations, "converged": r.converged}
         for r in rows],
        ["n", "replicate", "seconds", "iterations", "converged"], out)
    manifest = _manifest("bench", {"n_list": ns, "reps": reps, "mode": mode},
                         [], seed)
    _write_json({
        "schema": SCHEMA,
        "mode": mode,
        "median_seconds": {str(n): m for n, m in zip(ns, medians)},
        "slope": slope,
        "manifest": manifest,
    }, str(out) + ".manifest.json")
    for n, med in zip(ns, medians):
        click.echo(f"N={n}: median {med:.6f}s")
    click.echo(f"bench ({mode}): slope {slope:.4f} -> {out}")


if __name__ == "__main__":
    main()
