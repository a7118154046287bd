"""Command-line front door: ``bregfb {run,check,prox,sweep,report}``.

Exit codes: 0 success, 1 error (machine-readable JSON on stderr),
2 run stopped at max_iter, 3 a requested check was falsified.
"""

from __future__ import annotations

import argparse
import copy
import datetime
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

from . import conditions as cond
from .config import (
    load_config,
    parse_A,
    parse_B,
    parse_certificate,
    parse_config,
    parse_kernel,
    _vec,
)
from .core import BregfbError, UnsupportedPair
from .diagnostics import IterationTrace, diagnose, dumps_report, report_document
from .kernels import check_schedule
from .resolvents import prox
from .solver import RunAborted, run, run_minimization, validate

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER, EXIT_FALSIFIED = 0, 1, 2, 3
SEED_ENV = "BREGFB_SEED"


class CliError(Exception):
    def __init__(self, kind, message, **extra):
        super().__init__(message)
        self.payload = {"error": kind, "message": message, **extra}


def _emit_error(payload):
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _seed(args, cfg_seed):
    if args.seed is not None:
        return args.seed
    if os.environ.get(SEED_ENV):
        return int(os.environ[SEED_ENV])
    return cfg_seed


def _out_path(out_dir, name):
    if name is None:
        return None
    if out_dir and not os.path.isabs(name):
        return os.path.join(out_dir, name)
    return name


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# run


def execute(cfg, force=False):
    """Run a parsed config; returns (trace, report document)."""
    spec, stop = cfg.spec, cfg.stop
    minimization = cfg.mode == "minimization"
    report = validate(spec, minimization=minimization)
    if not report.passed and not force:
        raise CliError("validation_failed", "; ".join(report.violations),
                       violations=report.violations)
    try:
        tr = (run_minimization(spec, stop, force=force) if minimization
              else run(spec, stop, force=force))
    except RunAborted as exc:
        tr = exc.trace
    verdicts = diagnose(tr, cfg.diagnostics.get("checks"),
                        float(cfg.diagnostics.get("residual_tol", 1e-8)))
    doc = report_document(tr, verdicts)
    doc["mode"] = cfg.mode
    return tr, doc


def _status_code(status):
    if status.startswith("converged"):
        return EXIT_OK
    if status == "max_iter":
        return EXIT_MAX_ITER
    return EXIT_ERROR


def cmd_run(args) -> int:
    doc = load_config(args.config)
    if args.max_iter is not None:
        doc.setdefault("stop", {})["max_iter"] = args.max_iter
    if args.tol is not None:
        doc.setdefault("stop", {})["tol_step"] = args.tol
    cfg = parse_config(doc)
    tr, rep = execute(cfg, force=args.force)
    rep["seed"] = _seed(args, cfg.seed)
    rep["timestamp"] = _timestamp()
    outs = cfg.outputs
    out = args.out
    csv_path = _out_path(out, outs.get("trace_csv", "trace.csv" if out else None))
    json_path = _out_path(out, outs.get("trace_json", "trace.json" if out else None))
    rep_path = _out_path(out, outs.get("report_json", "report.json" if out else None))
    if csv_path:
        _write(csv_path, tr.to_csv())
    if json_path:
        _write(json_path, tr.dumps())
    text = dumps_report(rep)
    if rep_path:
        _write(rep_path, text)
    summary = {"name": cfg.name, "status": tr.status, "iterations": tr.N,
               "checks": {k: v["status"] for k, v in rep["checks"].items()}}
    print(json.dumps(summary, sort_keys=True))
    if tr.status == "error":
        _emit_error({"error": "run_aborted", "message": tr.cause})
    return _status_code(tr.status)


# --------------------------------------------------------------------------
# check


def run_check(entry: dict, seed: int):
    """Dispatch one check entry {"check": name, ...} to its checker."""
    e = dict(entry)
    name = e.pop("check")
    samples = int(e.pop("samples", cond.DEFAULT_SAMPLES))
    f = parse_kernel(e["kernel"]) if "kernel" in e else None
    A = parse_A(e["A"]) if "A" in e else None
    B = parse_B(e["B"]) if "B" in e else None
    rtol = float(e.get("rtol", 1e-9))
    S = [_vec(z) for z in e.get("S_points", [])]
    if name == "descent_pair":
        return cond.check_descent_pair(B, f, float(e["kappa"]), samples, seed, A=A, rtol=rtol)
    if name == "descent_triple":
        return cond.check_descent_triple(B, f, float(e["kappa"]), S, samples, seed, A=A, rtol=rtol)
    if name == "direct":
        return cond.check_direct(B, f, float(e["kappa"]), S, samples, seed, A=A, rtol=rtol)
    if name == "cocoercive":
        return cond.check_cocoercive(B, float(e["beta"]), samples, seed, rtol=rtol)
    if name == "lipschitz":
        return cond.check_lipschitz(B, float(e["nu"]), samples, seed, rtol=rtol)
    if name == "angle_bounded":
        return cond.check_angle_bounded(B, float(e["beta"]), float(e["nu"]), samples, seed, rtol=rtol)
    if name == "renaud_cohen":
        f = f or parse_kernel({"kind": "quadratic", "dim": B.dim})
        A = A or parse_A({"kind": "zero", "dim": B.dim})
        return cond.check_renaud_cohen(A, B, float(e["beta"]), samples=samples, seed=seed, f=f,
                                       rtol=rtol)
    if name == "strong_monotone":
        gs = cond.resolvent_graph_sampler(A, f, 1.0, B=B)
        return cond.check_strong_monotone(gs, float(e["mu"]), samples, seed, rtol=rtol)
    if name == "strong_convexity":
        return cond.check_strong_convexity(f, float(e["alpha"]), samples, seed, A=A, rtol=rtol)
    if name == "condition_main":
        cert = parse_certificate(e["certificate"])
        return cond.check_condition_main(A, B, f, cert, cond.Samplers(S), samples, seed, rtol=rtol)
    if name == "schedule":
        from .config import parse_schedule

        sched = parse_schedule(e.get("schedule"), f)
        return check_schedule(sched, int(e.get("n_max", 20)), samples, seed)
    raise CliError("unknown_check", f"unknown check {name!r}")


def cmd_check(args) -> int:
    doc = load_config(args.config)
    cfg = parse_config(doc, build_problem=False)
    seed = _seed(args, cfg.seed)
    if not cfg.checks:
        raise CliError("config_error", "config lists no checks")
    results = {}
    for i, entry in enumerate(cfg.checks):
        key = entry.get("id", f"{i}:{entry.get('check')}")
        results[key] = run_check(entry, seed).to_dict()
    passed = all(r["pass"] for r in results.values())
    rep = {"name": cfg.name, "seed": seed, "pass": passed, "checks": results,
           "timestamp": _timestamp()}
    text = dumps_report(rep)
    path = _out_path(args.out, cfg.outputs.get("report_json", "report.json" if args.out else None))
    if path:
        _write(path, text)
    print(json.dumps({"name": cfg.name, "pass": passed,
                      "checks": {k: r["pass"] for k, r in results.items()}}, sort_keys=True))
    return EXIT_OK if passed else EXIT_FALSIFIED


# --------------------------------------------------------------------------
# prox


def cmd_prox(args) -> int:
    if args.config:
        doc = load_config(args.config)
    else:
        doc = {}
    kernel = json.loads(args.kernel) if args.kernel else doc.get("kernel")
    amap = json.loads(args.map) if args.map else doc.get("A")
    gamma = args.gamma if args.gamma is not None else doc.get("gamma", 1.0)
    target = json.loads(args.target) if args.target else doc.get("target")
    if kernel is None or amap is None or target is None:
        raise CliError("config_error", "prox needs kernel, map and target")
    f, A = parse_kernel(kernel), parse_A(amap)
    res = prox(f, A, float(gamma), _vec(target),
               **({"tol": args.tol} if args.tol is not None else {}))
    out = {"x": res.x.coords.tolist(), "a_star": res.a_star.coords.tolist(),
           "residual": res.residual, "inclusion_gap": res.inclusion_gap,
           "iterations": res.iterations, "path": res.path}
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep


def _set_path(doc, path, value):
    keys = path.split(".")
    cur = doc
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


def _cell_label(assign):
    return ",".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in assign)


def _run_cell(doc, force):
    try:
        cfg = parse_config(doc)
    except BregfbError as exc:
        return {"validation": {"pass": False, "violations": [str(exc)]}, "outcome": "invalid"}
    rep = validate(cfg.spec, minimization=cfg.mode == "minimization")
    cell = {"validation": rep.to_dict()}
    if not rep.passed and not force:
        cell["outcome"] = "validation_failed"
        return cell
    try:
        _, r = execute(cfg, force=force)
    except UnsupportedPair as exc:
        cell["outcome"] = "unsupported_pair"
        cell["error"] = str(exc)
        return cell
    cell["report"] = r
    err = r.get("cause") or ""
    if r["status"] == "error" and ("UnsupportedPair" in err or "RangeFailure" in err):
        cell["outcome"] = "unsupported_pair"
        return cell
    ok = r["status"] != "error" and all(v["pass"] is not False for v in r["checks"].values())
    cell["outcome"] = "pass" if ok else "fail"
    return cell


def cmd_sweep(args) -> int:
    doc = load_config(args.config)
    grid = doc.pop("grid", None)
    if not grid:
        raise CliError("config_error", "sweep config needs a 'grid' mapping paths to values")
    if args.max_iter is not None:
        doc.setdefault("stop", {})["max_iter"] = args.max_iter
    if args.tol is not None:
        doc.setdefault("stop", {})["tol_step"] = args.tol
    keys = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        assign = list(zip(keys, combo))
        d = copy.deepcopy(doc)
        for k, v in assign:
            _set_path(d, k, v)
        cells.append((_cell_label(assign), d))
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(lambda c: _run_cell(c[1], args.force), cells))
    index = {label: res for (label, _), res in zip(cells, results)}
    ok = all(r["outcome"] == "pass" for r in results if r["validation"]["pass"]
             and r["outcome"] != "unsupported_pair")
    rep = {"name": doc.get("name", "sweep"), "pass": ok, "cells": index, "timestamp": _timestamp()}
    path = _out_path(args.out, doc.get("outputs", {}).get("report_json",
                                                           "sweep.json" if args.out else None))
    if path:
        _write(path, dumps_report(rep))
    print(json.dumps({label: r["outcome"] for label, r in index.items()}, sort_keys=True))
    return EXIT_OK if ok else EXIT_FALSIFIED


# --------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    tr = IterationTrace.load(args.trace)
    residual_tol = 1e-8
    checks = None
    if args.config:
        cfg = parse_config(load_config(args.config), build_problem=False)
        residual_tol = float(cfg.diagnostics.get("residual_tol", residual_tol))
        checks = cfg.diagnostics.get("checks")
    verdicts = diagnose(tr, checks, residual_tol)
    rep = report_document(tr, verdicts)
    rep["timestamp"] = _timestamp()
    text = dumps_report(rep)
    path = _out_path(args.out, "report.json") if args.out else None
    if path:
        _write(path, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(v.passed is not False for v in verdicts.values()) else EXIT_FALSIFIED


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bregfb", description="Bregman forward-backward splitting")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON config document")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--force", action="store_true", help="run despite failed validation")
        sp.add_argument("--max-iter", dest="max_iter", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)

    common(sub.add_parser("run", help="run a problem or preset"))
    common(sub.add_parser("check", help="run sampled condition checkers"))
    sp = sub.add_parser("prox", help="one Bregman resolvent query")
    common(sp, config_required=False)
    sp.add_argument("--kernel", help="kernel JSON")
    sp.add_argument("--map", help="operator JSON")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--target", help="target vector JSON")
    common(sub.add_parser("sweep", help="run a parameter grid concurrently"))
    sp = sub.add_parser("report", help="re-run diagnostics on a stored trace")
    common(sp, config_required=False)
    sp.add_argument("--trace", required=True, help="trace JSON written by run")
    return p


COMMANDS = {"run": cmd_run, "check": cmd_check, "prox": cmd_prox, "sweep": cmd_sweep,
            "report": cmd_report}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        _emit_error(exc.payload)
    except UnsupportedPair as exc:
        _emit_error({"error": "unsupported_pair", "message": str(exc)})
    except BregfbError as exc:
        _emit_error({"error": type(exc).__name__, "message": str(exc)})
    except (OSError, KeyError, TypeError, ValueError) as exc:
        _emit_error({"error": type(exc).__name__, "message": str(exc)})
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
