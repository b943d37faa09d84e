"""Experiment runner: ``sarmanov-ruin run|validate|version``.

An experiment is a TOML file with top-level ``seed`` and ``workers``, an
optional ``[output]`` table, a ``[model]`` table and a ``[task]`` table::

    seed = 42
    workers = 4

    [output]
    dir = "out"

    [model]
    theta = 1.0
    kernel = "fgm"                 # or "custom"

    [model.F]
    alpha = 2.0
    x_m = 1.0
    form = "I"                     # I, II, III or IV
    c = 1.0
    # [model.F.U] / [model.F.V]: family = "pareto" | "weibull" | "lognormal"

    [model.G]
    family = "uniform"             # uniform, beta, bounded_pareto, lognormal, point_mass
    b = 1.0

    [task]
    kind = "product-tail"
    x_grid = [10.0, 100.0, 1000.0] # or {start = 10, stop = 1e4, num = 7}
    method = "conditional"
    n_samples = 100000

Custom kernels name importable vectorized callables::

    [model.custom]
    phi1 = "mypackage.kernels:phi1"
    phi2 = "mypackage.kernels:phi2"
    b1 = 1.0
    b2 = 1.0
    d1 = -1.0

Exit codes: 0 success, 1 bad experiment file or arguments, 2 invalid model,
3 violated asymptotic hypothesis, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import importlib
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .asymptotics import breiman_constant, finite_horizon_factor, infinite_horizon_factor
from .conditions import dz_report, summability_report
from .errors import DomainError, HypothesisError, ModelError, NumericalError
from .marginals import (
    BoundedPareto,
    Lognormal,
    LognormalTail,
    ParetoTail,
    PointMass,
    RegularlyVaryingLaw,
    ScaledBeta,
    SlowlyVaryingSpec,
    Uniform,
    WeibullTail,
)
from .sarmanov import CustomKernels, FGMKernels, SarmanovModel, sample_joint
from .simulate import CURVE_COLUMNS, ratio_curve, truncation_plan

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_HYPOTHESIS, EXIT_NUMERICAL = 0, 1, 2, 3, 4

TASKS = ("constants", "product-tail", "ruin-finite", "ruin-infinite", "dz-check", "summability", "sample")
CURVE_TASKS = {"product-tail": "product", "ruin-finite": None, "ruin-infinite": "inf"}


class ConfigError(ValueError):
    """The experiment file is malformed."""


# --------------------------------------------------------------------------
# building the model
# --------------------------------------------------------------------------

_TAIL_FAMILIES = {"pareto": ParetoTail, "weibull": WeibullTail, "lognormal": LognormalTail}
_DISCOUNT_FAMILIES = {
    "uniform": Uniform,
    "beta": ScaledBeta,
    "bounded_pareto": BoundedPareto,
    "lognormal": Lognormal,
    "point_mass": PointMass,
}


def _family(table: dict, families: dict, where: str):
    if not isinstance(table, dict):
        raise ConfigError(f"[{where}] must be a table")
    params = dict(table)
    name = params.pop("family", None)
    if name not in families:
        raise ConfigError(f"[{where}] family must be one of {sorted(families)}, got {name!r}")
    try:
        return families[name](**params)
    except TypeError as exc:
        raise ConfigError(f"[{where}]: {exc}") from None


def _import_callable(path: str):
    module, sep, attr = str(path).partition(":")
    if not sep:
        raise ConfigError(f"kernel {path!r} must look like 'package.module:function'")
    try:
        fn = getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot import kernel {path!r}: {exc}") from None
    if not callable(fn):
        raise ConfigError(f"kernel {path!r} is not callable")
    return fn


def build_model(block: dict) -> SarmanovModel:
    if not isinstance(block, dict):
        raise ConfigError("missing [model] table")
    f = block.get("F")
    if not isinstance(f, dict):
        raise ConfigError("missing [model.F] table")
    form = str(f.get("form", "I")).upper()
    u = _family(f["U"], _TAIL_FAMILIES, "model.F.U") if "U" in f else None
    v = _family(f["V"], _TAIL_FAMILIES, "model.F.V") if "V" in f else None
    try:
        sv = SlowlyVaryingSpec(form, float(f.get("c", 1.0)), u, v)
        F = RegularlyVaryingLaw(float(f["alpha"]), float(f.get("x_m", 1.0)), sv)
    except KeyError as exc:
        raise ConfigError(f"[model.F] is missing {exc}") from None
    if "G" not in block:
        raise ConfigError("missing [model.G] table")
    G = _family(block["G"], _DISCOUNT_FAMILIES, "model.G")

    kind = str(block.get("kernel", "fgm")).lower()
    if kind == "fgm":
        kernels = FGMKernels()
    elif kind == "custom":
        c = block.get("custom")
        if not isinstance(c, dict):
            raise ConfigError("kernel = 'custom' needs a [model.custom] table")
        try:
            kernels = CustomKernels(
                _import_callable(c["phi1"]), _import_callable(c["phi2"]), float(c["b1"]), float(c["b2"]), float(c["d1"])
            )
        except KeyError as exc:
            raise ConfigError(f"[model.custom] is missing {exc}") from None
    else:
        raise ConfigError(f"kernel must be 'fgm' or 'custom', got {kind!r}")
    if "theta" not in block:
        raise ConfigError("[model] needs theta")
    return SarmanovModel(F, G, float(block["theta"]), kernels)


# --------------------------------------------------------------------------
# experiment file
# --------------------------------------------------------------------------


def load_spec(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolve(spec: dict, seed: Optional[int], workers: Optional[int], out_dir: Optional[str]) -> dict:
    """Apply command-line overrides and check the fields every run needs."""
    try:
        spec = json.loads(json.dumps(spec))  # deep copy that also rejects TOML dates
    except TypeError as exc:
        raise ConfigError(f"unsupported value in experiment file: {exc}") from None
    if seed is not None:
        spec["seed"] = seed
    if workers is not None:
        spec["workers"] = workers
    if out_dir is not None:
        spec.setdefault("output", {})["dir"] = out_dir
    for key in ("seed", "workers"):
        if not isinstance(spec.get(key), int) or isinstance(spec.get(key), bool):
            raise ConfigError(f"'{key}' must be given as an integer, in the file or on the command line")
    if spec["seed"] < 0:
        raise ConfigError("seed must be nonnegative")
    if spec["workers"] < 1:
        raise ConfigError("workers must be at least 1")
    task = spec.get("task")
    if not isinstance(task, dict) or task.get("kind") not in TASKS:
        raise ConfigError(f"[task] kind must be one of {TASKS}")
    return spec


def _x_grid(task: dict) -> list[float]:
    g = task.get("x_grid")
    if isinstance(g, dict):
        try:
            xs = np.geomspace(float(g["start"]), float(g["stop"]), int(g["num"]))
        except KeyError as exc:
            raise ConfigError(f"x_grid table is missing {exc}") from None
        return [float(v) for v in xs]
    if isinstance(g, list) and g:
        return [float(v) for v in g]
    raise ConfigError("task needs x_grid: a list of numbers or {start, stop, num}")


# --------------------------------------------------------------------------
# tasks
# --------------------------------------------------------------------------


def _constants(model, task, seed, workers):
    const = breiman_constant(model)
    out = const.as_dict()
    horizons = task.get("n", [2, 5])
    out["finite_factor"] = {str(n): finite_horizon_factor(model, int(n)) for n in np.atleast_1d(horizons)}
    try:
        out["infinite_factor"] = infinite_horizon_factor(model)
    except HypothesisError as exc:
        out["infinite_factor"] = None
        out["infinite_factor_unavailable"] = str(exc)
    return out, None


def _curve(model, task, seed, workers):
    kind = task["kind"]
    horizon = CURVE_TASKS[kind]
    if horizon is None:
        if "n" not in task:
            raise ConfigError("ruin-finite needs n")
        horizon = int(task["n"])
    method = task.get("method", "exact" if kind == "product-tail" else "conditional")
    xs = _x_grid(task)
    tail_tol = float(task.get("tail_tol", 0.01))
    rows = ratio_curve(
        model, xs, horizon, method, int(task.get("n_samples", 100_000)), seed, tail_tol, workers
    )
    result = {"horizon": horizon, "method": method, "predicted": rows[0].predicted}
    if horizon == "inf":
        plans = [truncation_plan(model, x, tail_tol) for x in xs]
        result["truncation_index"] = [p.index for p in plans]
        result["remainder_bound"] = [p.bound for p in plans]
        result["remainder_over_estimate"] = [p.bound / r.estimate if r.estimate > 0 else None for p, r in zip(plans, rows)]
    return result, rows


def _dz(model, task, seed, workers):
    grid = _x_grid(task) if "x_grid" in task else None
    return dz_report(model, grid).as_dict(), None


def _summability(model, task, seed, workers):
    grid = _x_grid(task) if "x_grid" in task else None
    rep = summability_report(
        model,
        task.get("variant", "DZ2"),
        int(task.get("i_max", 12)),
        float(task.get("epsilon", 0.5)),
        grid,
        int(task.get("mc_n", 1_000_000)),
        seed,
        workers,
    )
    return rep.as_dict(), None


def _sample(model, task, seed, workers, out_dir: Path):
    n = int(task.get("n_samples", 100_000))
    xy = sample_joint(model, n, seed, workers)
    path = out_dir / "samples.npz"
    np.savez(path, x=xy[:, 0], y=xy[:, 1])
    phi = model.phi1(xy[:, 0]) * model.phi2(xy[:, 1])
    return {
        "n_samples": n,
        "file": path.name,
        "mean_phi1": float(np.mean(model.phi1(xy[:, 0]))),
        "mean_phi2": float(np.mean(model.phi2(xy[:, 1]))),
        "mean_phi1_phi2": float(np.mean(phi)),
        "stderr_phi1_phi2": float(np.std(phi, ddof=1) / math.sqrt(n)),
    }, None


_DISPATCH = {
    "constants": _constants,
    "product-tail": _curve,
    "ruin-finite": _curve,
    "ruin-infinite": _curve,
    "dz-check": _dz,
    "summability": _summability,
}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _json_safe(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def curve_csv(rows) -> str:
    """CSV text with shortest round-trip float formatting, so reruns compare byte for byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_COLUMNS)
    for row in rows:
        w.writerow([repr(float(v)) for v in row.as_tuple()])
    return buf.getvalue()


def execute(spec: dict) -> dict:
    """Run a resolved experiment and write its outputs; returns the summary."""
    out_dir = Path(spec.get("output", {}).get("dir", "out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    seed, workers = spec["seed"], spec["workers"]
    task = spec["task"]
    start = time.perf_counter()
    model = build_model(spec.get("model"))
    model.require_valid()
    if task["kind"] == "sample":
        result, rows = _sample(model, task, seed, workers, out_dir)
    else:
        result, rows = _DISPATCH[task["kind"]](model, task, seed, workers)
    files = ["summary.json"]
    if rows is not None:
        (out_dir / "curve.csv").write_text(curve_csv(rows))
        files.insert(0, "curve.csv")
    summary = {
        "spec": spec,
        "task": task["kind"],
        "seed": seed,
        "workers": workers,
        "version": __version__,
        "wall_time_s": time.perf_counter() - start,
        "files": files,
        "result": result,
    }
    (out_dir / "summary.json").write_text(json.dumps(_json_safe(summary), indent=2, ensure_ascii=False) + "\n")
    return summary


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sarmanov-ruin", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run an experiment file"), ("validate", "check an experiment file and its model")):
        s = sub.add_parser(name, help=text)
        s.add_argument("spec", type=Path, help="experiment TOML file")
        s.add_argument("--seed", type=int, default=None, help="override the file's seed")
        s.add_argument("--workers", type=int, default=None, help="override the file's worker count")
        s.add_argument("--out-dir", default=None, help="override [output] dir")
    sub.add_parser("version", help="print the library version")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    try:
        spec = resolve(load_spec(args.spec), args.seed, args.workers, args.out_dir)
        if args.command == "validate":
            model = build_model(spec.get("model"))
            report = model.report
            for check in report.checks:
                status = "ok  " if check.passed else "FAIL"
                print(f"{status} {check.name}: {check.detail}")
            for note in report.warnings:
                print(f"note {note}")
            if not report.valid:
                print("invalid Sarmanov model: " + "; ".join(report.failures()), file=sys.stderr)
                return EXIT_MODEL
            return EXIT_OK
        summary = execute(spec)
        print(json.dumps(_json_safe(summary["result"]), ensure_ascii=False)[:2000])
        return EXIT_OK
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except HypothesisError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
