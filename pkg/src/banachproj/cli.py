"""Command-line front end.

Every run reads one JSON config file; `--seed` and `--out` override the
`seed` and `output_path` keys.  Reports are written with fixed float
formatting (17 significant digits) and stable key order, so identical
configs produce byte-identical files.  An `--out` ending in `.csv`
selects the tabular form for commands that have one (moduli, rate);
everything else is JSON.  Without `--out` the report goes to stdout.

Exit codes: 0 success, 1 a verify suite reported failures, 2 malformed
config or arguments, 3 infeasible set descriptor, 4 an iterative
computation failed to converge.

Config keys by command (all vectors are plain JSON lists):

  project     space{p,n}, set, inputs{x}, tolerances{cert_tol,max_iter}?
  derivative  space, set, inputs{x,v}
  classify    space, set, inputs{x}
  verify      suite, count?, seed?, space?
  moduli      space, moduli{curve,epsilons?,ts?,budget?,rounds?,fit?,threads?}
  rate        space, set, inputs{x}, rate{directions|count,k_min?,k_max?,
              quotient_tol?,window?}
"""
from __future__ import annotations

import argparse
import inspect
import json
import sys

import numpy as np

from . import moduli as moduli_mod
from . import reporting, solver
from .derivative import directional_derivative
from .numdiff import ConvergenceError, StepSchedule, cauchy_rate_probe, numdiff_derivative
from .sets import (
    InfeasibleSetError,
    PolytopeH,
    PolytopeV,
    classify_point,
    descriptor_dimension,
    descriptor_from_json,
    descriptor_to_json,
)
from .space import LpSpace
from .verify import SUITES, run_suite

__all__ = ["main"]


class _ConfigError(Exception):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise _ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise _ConfigError("config root must be a JSON object")
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise _ConfigError(f"config key {key!r} is required for this command")
    return cfg[key]


def _get_space(cfg: dict) -> tuple[LpSpace, int]:
    spc = _require(cfg, "space")
    if not isinstance(spc, dict) or "p" not in spc or "n" not in spc:
        raise _ConfigError('"space" must be an object with keys "p" and "n"')
    try:
        space = LpSpace(float(spc["p"]))
        n = int(spc["n"])
    except (TypeError, ValueError) as exc:
        raise _ConfigError(f"bad space parameters: {exc}") from exc
    if n < 1:
        raise _ConfigError("space dimension must be positive")
    return space, n


def _get_set(cfg: dict, n: int):
    data = _require(cfg, "set")
    try:
        C = descriptor_from_json(data)
    except InfeasibleSetError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise _ConfigError(f"bad set descriptor: {exc}") from exc
    dim = descriptor_dimension(C)
    if dim is not None and dim != n:
        raise _ConfigError(f"set lives in dimension {dim}, space says {n}")
    return C


def _get_vec(cfg: dict, key: str, n: int) -> np.ndarray:
    inputs = _require(cfg, "inputs")
    if not isinstance(inputs, dict) or key not in inputs:
        raise _ConfigError(f'config needs "inputs" with a {key!r} vector')
    try:
        vec = np.asarray(inputs[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise _ConfigError(f"inputs[{key!r}] is not a numeric vector: {exc}") from exc
    if vec.shape != (n,):
        raise _ConfigError(f"inputs[{key!r}] must have length {n}")
    return vec


def _get_points(cfg: dict, n: int) -> list[np.ndarray]:
    """Query points for point-wise commands.

    Accepts either {"x": [..]} for a single point or a bare list of
    points [[..], [..]] for a batch.
    """
    inputs = _require(cfg, "inputs")
    if isinstance(inputs, dict):
        return [_get_vec(cfg, "x", n)]
    if not isinstance(inputs, list) or not inputs:
        raise _ConfigError('"inputs" must be {"x": [...]} or a nonempty list of points')
    pts = []
    for i, entry in enumerate(inputs):
        try:
            vec = np.asarray(entry, dtype=float)
        except (TypeError, ValueError) as exc:
            raise _ConfigError(f"inputs[{i}] is not a numeric vector: {exc}") from exc
        if vec.shape != (n,):
            raise _ConfigError(f"inputs[{i}] must have length {n}")
        pts.append(vec)
    return pts


def _emit(report, out_path, csv_rows=None) -> None:
    if out_path is None:
        sys.stdout.write(reporting.dumps_stable(report))
    elif str(out_path).endswith(".csv") and csv_rows is not None:
        reporting.write_csv(out_path, csv_rows)
    else:
        reporting.write_json(out_path, report)


def _space_json(space: LpSpace, n: int) -> dict:
    return {"p": space.p, "n": n}


def _cmd_project(cfg: dict, seed: int, out) -> int:
    space, n = _get_space(cfg)
    C = _get_set(cfg, n)
    points = _get_points(cfg, n)
    tols = cfg.get("tolerances", {})
    if not isinstance(tols, dict):
        raise _ConfigError('"tolerances" must be an object')
    max_iter = int(tols.get("max_iter", solver.MAX_ITER))
    cert_tol = float(tols.get("cert_tol", solver.CERT_TOL))
    results = [
        solver.project_with_certificate(space, C, x, max_iter=max_iter, cert_tol=cert_tol)
        for x in points
    ]
    report = {
        "command": "project",
        "space": _space_json(space, n),
        "set": descriptor_to_json(C),
    }
    if len(points) == 1:
        report["x"] = [float(c) for c in points[0]]
        report.update(results[0].to_json())
    else:
        report["results"] = [
            {"x": [float(c) for c in x], **r.to_json()} for x, r in zip(points, results)
        ]
    _emit(report, out)
    return 0 if all(r.converged for r in results) else 4


def _cmd_derivative(cfg: dict, seed: int, out) -> int:
    space, n = _get_space(cfg)
    C = _get_set(cfg, n)
    x = _get_vec(cfg, "x", n)
    v = _get_vec(cfg, "v", n)
    result = directional_derivative(space, C, x, v)

    if isinstance(C, (PolytopeH, PolytopeV)):
        sched = StepSchedule(quotient_tol=1e-4).truncated(1e-8)
    else:
        sched = StepSchedule()
    est = numdiff_derivative(space, lambda z: solver.project(space, C, z), x, v, sched)
    agreement = None
    if est.converged:
        agreement = space.norm(result.value - est.estimate) / max(1.0, space.norm(result.value))
    report = {
        "command": "derivative",
        "space": _space_json(space, n),
        "set": descriptor_to_json(C),
        "x": [float(c) for c in x],
        "v": [float(c) for c in v],
        "analytic": result.to_json(),
        "numeric": est.summary(),
        "agreement": agreement,
    }
    _emit(report, out)
    return 0


def _cmd_classify(cfg: dict, seed: int, out) -> int:
    space, n = _get_space(cfg)
    C = _get_set(cfg, n)
    x = _get_vec(cfg, "x", n)
    try:
        pc = classify_point(space, C, x)
    except ValueError as exc:
        raise _ConfigError(str(exc)) from exc
    report = {
        "command": "classify",
        "space": _space_json(space, n),
        "set": descriptor_to_json(C),
        "x": [float(c) for c in x],
        "tag": pc.tag,
        "witness": None if pc.witness is None else [float(c) for c in pc.witness],
    }
    _emit(report, out)
    return 0


def _cmd_verify(cfg: dict, seed: int, out) -> int:
    name = _require(cfg, "suite")
    if name not in SUITES:
        raise _ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    options: dict = {"seed": seed}
    if "count" in cfg:
        options["count"] = int(cfg["count"])
    if "space" in cfg:
        space, n = _get_space(cfg)
        options["p"] = space.p
        options["n"] = n
    accepted = inspect.signature(SUITES[name]).parameters
    options = {k: v for k, v in options.items() if k in accepted}
    report = run_suite(name, **options)
    sys.stdout.write(report.summary() + "\n")
    if out is not None:
        _emit(report.to_json(), out)
    return 0 if report.passed else 1


def _cmd_moduli(cfg: dict, seed: int, out) -> int:
    space, n = _get_space(cfg)
    opts = cfg.get("moduli", {})
    if not isinstance(opts, dict):
        raise _ConfigError('"moduli" must be an object')
    curve = opts.get("curve", "both")
    if curve not in ("delta", "rho", "both"):
        raise _ConfigError('moduli curve must be "delta", "rho" or "both"')
    budget = int(opts.get("budget", 100_000))
    rounds = int(opts.get("rounds", 3))
    threads = opts.get("threads")
    est = None
    try:
        if curve in ("delta", "both"):
            eps = opts.get("epsilons")
            if eps is None:
                raise _ConfigError('delta estimation needs an "epsilons" grid')
            est = moduli_mod.estimate_convexity_modulus(
                space.p, n, eps, budget=budget, seed=seed, rounds=rounds, threads=threads)
        if curve in ("rho", "both"):
            ts = opts.get("ts")
            if ts is None:
                raise _ConfigError('rho estimation needs a "ts" grid')
            rho_est = moduli_mod.estimate_smoothness_modulus(
                space.p, n, ts, budget=budget, seed=seed, rounds=rounds, threads=threads)
            est = rho_est if est is None else est.merged_with(rho_est)
    except ValueError as exc:
        raise _ConfigError(str(exc)) from exc
    report = {"command": "moduli", "space": _space_json(space, n), **est.to_json()}
    if opts.get("fit", False):
        try:
            report["fit"] = moduli_mod.fit_power_type(est).to_json()
        except ValueError as exc:
            raise _ConfigError(str(exc)) from exc
    if out is None:
        _emit(report, None)
    else:
        # a file target gets both renderings: curves as CSV, summary as JSON
        base = str(out)
        for suffix in (".csv", ".json"):
            base = base[: -len(suffix)] if base.endswith(suffix) else base
        reporting.write_csv(base + ".csv", est.csv_rows())
        reporting.write_json(base + ".json", report)
    return 0


def _cmd_rate(cfg: dict, seed: int, out) -> int:
    space, n = _get_space(cfg)
    C = _get_set(cfg, n)
    x = _get_vec(cfg, "x", n)
    opts = cfg.get("rate", {})
    if not isinstance(opts, dict):
        raise _ConfigError('"rate" must be an object')
    if "directions" in opts:
        try:
            dirs = [space.unit(np.asarray(d, dtype=float)) for d in opts["directions"]]
        except (TypeError, ValueError) as exc:
            raise _ConfigError(f"bad rate directions: {exc}") from exc
        if any(d.shape != (n,) for d in dirs):
            raise _ConfigError(f"rate directions must have length {n}")
    else:
        count = int(opts.get("count", 8))
        rng = np.random.default_rng(seed)
        dirs = [space.unit(rng.standard_normal(n)) for _ in range(count)]
    k_min = int(opts.get("k_min", 8))
    k_max = int(opts.get("k_max", 20))
    if k_max <= k_min:
        raise _ConfigError("rate schedule needs k_max > k_min")
    sched = StepSchedule(
        t_values=tuple(2.0 ** -k for k in range(k_min, k_max + 1)),
        quotient_tol=float(opts.get("quotient_tol", 1e-7)),
        window=int(opts.get("window", 3)),
    )
    if isinstance(C, (PolytopeH, PolytopeV)):
        sched = sched.truncated(1e-8)
    rep = cauchy_rate_probe(space, lambda z: solver.project(space, C, z), x, dirs, sched)
    report = {
        "command": "rate",
        "space": _space_json(space, n),
        "set": descriptor_to_json(C),
        "x": [float(c) for c in x],
        **rep.summary(),
        "pairs": [list(row) for row in rep.pairs],
    }
    _emit(report, out, csv_rows=rep.csv_rows())
    return 0


_COMMANDS = {
    "project": _cmd_project,
    "derivative": _cmd_derivative,
    "classify": _cmd_classify,
    "verify": _cmd_verify,
    "moduli": _cmd_moduli,
    "rate": _cmd_rate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="banachproj",
        description="Metric projections, their derivatives and moduli in finite lp spaces.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the config output_path")
    args = parser.parse_args(argv)

    try:
        cfg = _load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        out = args.out if args.out is not None else cfg.get("output_path")
        return _COMMANDS[args.command](cfg, seed, out)
    except _ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleSetError as exc:
        print(f"infeasible set: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
