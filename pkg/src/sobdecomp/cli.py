"""Command line entry point: ``sobdecomp {decompose,solve,verify,sweep}``.

Exit codes: 0 success, 1 suite failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from .config import ConfigError, RunConfig
from .function_space import FormParams, write_csv
from .harmonic import (
    decompose_zero_alpha,
    g_slope_spread,
    solve_neumann,
    solve_zero_alpha,
)
from .projection import DofMap, decompose_F_s, decompose_part, verify_three_way
from .suites import SUITES, run_suites

log = logging.getLogger("sobdecomp")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SWEEP_PARAMS = ("mesh_h", "alpha", "depth")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def canonicalize(report):
    """Drop wall-clock fields (keys ending in ``_seconds``)."""
    if isinstance(report, dict):
        return {k: canonicalize(v) for k, v in report.items() if not k.endswith("_seconds")}
    if isinstance(report, list):
        return [canonicalize(v) for v in report]
    return report


def dump_report(report: dict, canonical: bool = False) -> str:
    rep = _jsonable(report)
    if canonical:
        rep = canonicalize(rep)
    return json.dumps(rep, indent=2, sort_keys=True)


def cmd_decompose(cfg: RunConfig, csv_path=None) -> dict:
    G, mesh, f = cfg.build()
    p = FormParams(cfg.alpha)
    t0 = time.perf_counter()
    results = {}
    if p.alpha > 0:
        main = decompose_F_s(f, G, p)
        results["decompose_F_s"] = main.to_json()
        results["decompose_part_full"] = decompose_part(f, G, p, "full").to_json()
        results["decompose_part_subspace"] = decompose_part(main.f1, G, p, "subspace").to_json()
        results["verify_three_way"] = verify_three_way(f, G, p, tol=cfg.tol("identity_tol", 1e-8)).to_json()
    else:
        main = decompose_zero_alpha(f, G)
        results["decompose_zero_alpha"] = main.to_json()
    results["pythagoras_ok"] = main.pythagoras_gap <= cfg.tol("pythagoras_tol", 1e-8)
    if csv_path:
        write_csv(csv_path, mesh.nodes, main.csv_columns())
    return {
        "command": "decompose",
        "config": cfg.to_dict(),
        "mesh": {"n_nodes": mesh.n_nodes, "n_f_components": mesh.n_f_components},
        "results": results,
        "timing": {"decompose_seconds": time.perf_counter() - t0},
    }


def _solve(cfg: RunConfig, G, f):
    rng = np.random.default_rng(cfg.seed)
    tols = {k: cfg.tolerances[k] for k in ("ode_tol", "neumann_tol") if k in cfg.tolerances}
    if cfg.alpha > 0:
        return solve_neumann(f, G, FormParams(cfg.alpha), rng=rng, **tols)
    return solve_zero_alpha(f, G, cfg.flanks(), rng=rng, **tols)


def cmd_solve(cfg: RunConfig, csv_path=None) -> dict:
    G, mesh, f = cfg.build()
    t0 = time.perf_counter()
    fam = _solve(cfg, G, f)
    elapsed = time.perf_counter() - t0
    if csv_path:
        write_csv(csv_path, mesh.nodes, fam.csv_columns())
    return {
        "command": "solve",
        "config": cfg.to_dict(),
        "mesh": {"n_nodes": mesh.n_nodes, "n_f_components": mesh.n_f_components},
        "results": fam.to_json(),
        "timing": {"solve_seconds": elapsed},
    }


def cmd_verify(cfg: RunConfig, suite: str = "all") -> tuple[int, dict]:
    t0 = time.perf_counter()
    results = run_suites(cfg, suite)
    table = {}
    all_ok = True
    for name, checks in results.items():
        ok = all(c.passed for c in checks)
        all_ok &= ok
        table[name] = {"passed": ok, "checks": [c.to_json() for c in checks]}
    report = {
        "command": "verify",
        "suite": suite,
        "config": cfg.to_dict(),
        "suites": table,
        "passed": all_ok,
        "timing": {"verify_seconds": time.perf_counter() - t0},
    }
    return (EXIT_OK if all_ok else EXIT_FAIL), report


def _sweep_config(cfg: RunConfig, param: str, value) -> RunConfig:
    if param == "mesh_h":
        return cfg.replace(mesh_h=float(value))
    if param == "alpha":
        if value < 0:
            raise ConfigError("values", "alpha values must be >= 0")
        return cfg.replace(alpha=float(value))
    if param == "depth":
        if cfg.g_spec.get("type") != "cantor_complement":
            raise ConfigError("g_spec.type", "a depth sweep needs a cantor_complement G")
        if int(value) != value or value < 0:
            raise ConfigError("values", "depth values must be nonnegative integers")
        return cfg.replace(g_spec={**cfg.g_spec, "depth": int(value)})
    raise ConfigError("param", f"expected one of {SWEEP_PARAMS}, got {param!r}")


def loglog_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if np.ptp(lx) == 0:
        return float("nan")
    return float(np.polyfit(lx, ly, 1)[0])


def cmd_sweep(cfg: RunConfig, param: str, values) -> dict:
    configs = [_sweep_config(cfg, param, v) for v in values]
    rows = []
    for value, c in zip(values, configs):
        G, mesh, f = c.build()
        t0 = time.perf_counter()
        fam = _solve(c, G, f)
        elapsed = time.perf_counter() - t0
        rows.append({
            "value": value,
            "n_nodes": mesh.n_nodes,
            "n_dofs": DofMap.subspace(mesh).n_dofs,
            "family_dim": fam.family_dim,
            "ode_residual": fam.checks["ode_residual"],
            "neumann_residual": fam.checks["neumann_residual"],
            "checks_passed": fam.checks["passed"],
            "g_slope_spread": g_slope_spread(fam.particular),
            "solve_seconds": elapsed,
        })
    summary = {}
    if param == "mesh_h":
        res = [r["ode_residual"] for r in rows]
        summary["ode_residual_ratios"] = [a / b if b > 0 else None for a, b in zip(res, res[1:])]
    elif param == "alpha":
        sp = [r["g_slope_spread"] for r in rows]
        order = np.argsort([-v for v in values])
        ordered = [sp[i] for i in order]
        summary["g_slope_spread_monotone"] = all(a >= b for a, b in zip(ordered, ordered[1:]))
    elif param == "depth":
        summary["family_dim_is_2_pow_depth"] = all(r["family_dim"] == 2 ** int(r["value"]) for r in rows)
        summary["time_vs_dofs_loglog_slope_seconds"] = loglog_slope(
            [r["n_dofs"] for r in rows], [r["solve_seconds"] for r in rows])
    return {"command": "sweep", "param": param, "config": cfg.to_dict(), "rows": rows, "summary": summary}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sobdecomp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("decompose", "solve", "verify", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--canonical", action="store_true", help="omit timing fields")
        if name in ("decompose", "solve"):
            sp.add_argument("--csv", help="write nodal values as CSV")
        if name == "verify":
            sp.add_argument("--suite", default="all", choices=SUITES + ("all",))
        if name == "sweep":
            sp.add_argument("--param", required=True, choices=SWEEP_PARAMS)
            sp.add_argument("--values", required=True, help="comma separated values")
    return ap


def _setup_logging():
    level = os.environ.get("SOBDECOMP_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_values(text: str) -> list:
    out = []
    for i, tok in enumerate(text.split(",")):
        try:
            v = float(tok)
        except ValueError:
            raise ConfigError(f"values[{i}]", f"not a number: {tok!r}")
        out.append(int(v) if v.is_integer() and "." not in tok and "e" not in tok.lower() else v)
    return out


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        code = EXIT_OK
        if args.command == "decompose":
            report = cmd_decompose(cfg, args.csv)
        elif args.command == "solve":
            report = cmd_solve(cfg, args.csv)
        elif args.command == "verify":
            code, report = cmd_verify(cfg, args.suite)
        else:
            report = cmd_sweep(cfg, args.param, _parse_values(args.values))
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error at --config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dump_report(report, args.canonical)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
