"""Command-line interface: ``qfilab run | sweep | verify | list``."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import scenarios
from .errors import ParameterError, QfiLabError

DEFAULT_SEED = 0xF15E4
EXIT_UNKNOWN = 2
EXIT_NUMERICAL = 3


def jsonable(obj):
    """Recursively convert numpy scalars and arrays to plain Python types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(scenario: scenarios.Scenario, results) -> str:
    """Rows with the scenario's parameter columns followed by its fixed output columns."""
    cols = list(scenario.schema) + list(scenario.columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in results:
        flat = r.flat()
        w.writerow([_fmt(r.params[c]) if c in r.params else _fmt(flat.get(c)) for c in cols])
    return buf.getvalue()


def parse_params(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--param")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_sweep(text: str) -> tuple[str, np.ndarray, bool]:
    """``key:lo:hi:steps[:log]`` into the parameter name and its grid."""
    parts = text.split(":")
    if len(parts) not in (4, 5) or (len(parts) == 5 and parts[4] != "log"):
        raise click.BadParameter("expected key:lo:hi:steps[:log]", param_hint="--sweep")
    key = parts[0]
    try:
        lo, hi, steps = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--sweep") from exc
    if steps < 1:
        raise click.BadParameter("steps must be positive", param_hint="--sweep")
    log = len(parts) == 5
    if log:
        if lo <= 0 or hi <= 0:
            raise click.BadParameter("log sweeps need positive bounds", param_hint="--sweep")
        grid = np.geomspace(lo, hi, steps)
    else:
        grid = np.linspace(lo, hi, steps)
    return key, grid, log


def _threads(n: int | None) -> int:
    if n is None:
        n = int(os.environ.get("QFILAB_THREADS", "1"))
    return max(1, n)


def _lookup(name: str) -> scenarios.Scenario:
    if name not in scenarios.REGISTRY:
        click.echo(f"unknown scenario {name!r}; available:", err=True)
        for s in scenarios.names():
            click.echo(f"  {s}", err=True)
        sys.exit(EXIT_UNKNOWN)
    return scenarios.REGISTRY[name]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _numerical_failure(exc: Exception):
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(EXIT_NUMERICAL)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at INFO level.")
def main(verbose: bool):
    """Fisher-information trade-offs for noisy quantum clocks."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")


@main.command("list")
def list_cmd():
    """List registered scenarios and their parameters."""
    for name in scenarios.names():
        s = scenarios.REGISTRY[name]
        params = ", ".join(f"{k}={d[1]}" for k, d in s.schema.items())
        click.echo(f"{name:26s} {s.topic}  [{params}]")


@main.command()
@click.option("--scenario", "name", required=True, help="Registered scenario name.")
@click.option("--param", "params", multiple=True, help="key=value, repeatable.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
def run(name, params, fmt, out, seed):
    """Evaluate one scenario."""
    sc = _lookup(name)
    try:
        res = sc.run(parse_params(params))
    except ParameterError as exc:
        raise click.UsageError(str(exc)) from exc
    except (QfiLabError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _numerical_failure(exc)
    if fmt == "json":
        d = res.as_dict()
        d["seed"] = seed
        _emit(json.dumps(jsonable(d), indent=2, sort_keys=False) + "\n", out)
    else:
        _emit(csv_text(sc, [res]), out)


@main.command()
@click.option("--scenario", "name", required=True)
@click.option("--sweep", "sweep_spec", required=True, help="key:lo:hi:steps[:log]")
@click.option("--param", "params", multiple=True, help="Fixed key=value, repeatable.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--threads", type=int, default=None, help="Worker threads (default: QFILAB_THREADS or 1).")
def sweep(name, sweep_spec, params, fmt, out, seed, threads):
    """Evaluate a scenario over a one-parameter grid."""
    sc = _lookup(name)
    key, grid, log = parse_sweep(sweep_spec)
    if key not in sc.schema or sc.schema[key][0] not in (int, float):
        raise click.UsageError(f"{key!r} is not a numeric parameter of {name}")
    fixed = parse_params(params)
    points = [{**fixed, key: (round(float(v)) if sc.schema[key][0] is int else float(v))} for v in grid]
    try:
        for pt in points:
            sc.parse(pt)
        with ThreadPoolExecutor(max_workers=_threads(threads)) as pool:
            results = list(pool.map(sc.run, points))
    except ParameterError as exc:
        raise click.UsageError(str(exc)) from exc
    except (QfiLabError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _numerical_failure(exc)
    fit = None
    if log and sc.fit_key:
        from .bounds import weak_noise_order_fit

        pts = [(r.params[key], r.flat().get(sc.fit_key)) for r in results]
        pts = [(x, y) for x, y in pts if y is not None]
        try:
            slope, err = weak_noise_order_fit(pts)
            fit = {"column": sc.fit_key, "slope": slope, "stderr": err}
            click.echo(f"order fit of {sc.fit_key} vs {key}: slope {slope:.4f} +/- {err:.4f}", err=True)
        except QfiLabError as exc:
            click.echo(f"order fit skipped: {exc}", err=True)
    if fmt == "json":
        d = {
            "schema": 1,
            "scenario": name,
            "topic": sc.topic,
            "sweep": {"key": key, "grid": grid, "log": log},
            "seed": seed,
            "order_fit": fit,
            "results": [r.as_dict() for r in results],
        }
        _emit(json.dumps(jsonable(d), indent=2) + "\n", out)
    else:
        _emit(csv_text(sc, results), out)


@main.command()
@click.option("--suite", type=click.Choice(["core", "codes", "bounds", "lindblad", "scenarios", "all"]), default="all")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print a machine-readable summary.")
def verify(suite, seed, as_json):
    """Run the built-in property suites; exit 1 on any failure."""
    from . import verify as vf

    checks = vf.run_suite(suite, seed)
    failed = [c for c in checks if not c.passed]
    if as_json:
        click.echo(json.dumps(jsonable({"suite": suite, "seed": seed, "passed": not failed, "checks": [c._asdict() for c in checks]}), indent=2))
    else:
        for c in checks:
            click.echo(f"{'PASS' if c.passed else 'FAIL'} {c.suite}/{c.name}: {c.detail}")
        click.echo(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
