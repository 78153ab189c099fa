"""Command-line front end: graph generation, sweeps and report emission.

Exit codes: 0 success, 1 an inequality check produced slack below the
violation threshold, 2 usage error.  Reports serialize floats with 17
significant digits so a replay of the same configuration reproduces the
output byte for byte.  ``LICURV_THREADS`` bounds the worker count of the
per-vertex curvature optimization.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import estimates, harnack, heat, selftest
from .curvature import CdeOptions, cde_report
from .graphs import graph_from_spec
from .harnack import AffineAlpha
from .profiles import alpha_phi, parse_profile_spec

__all__ = ["main", "dispatch", "RunConfig", "emit_report"]

_SUBCOMMANDS = ("gen", "curvature", "heat", "liyau", "liyau-local", "hamilton",
                "harnack", "rho", "kernel", "selftest")


@dataclass
class RunConfig:
    """Fully serializable description of one CLI run."""

    subcommand: str
    graph: str = ""
    weights: str = "unit"
    measure: str = "unit"
    profile: str = ""
    K: float = 0.0
    n: float = 4.0
    tgrid: str = "log:0.05:5:25"
    u0: str = "delta:0"
    x: int = 0
    y: int = 0
    x0: int = 0
    R: int = 1
    T1: float = 1.0
    T2: float = 2.0
    alpha: str = "const:1"
    out: str = ""
    format: str = ""
    seed: int = 0
    tol_violation: float = 1e-9
    delta: float | None = None
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            payload = json.load(fh)
        return cls(**payload)


def _parse_tgrid(spec):
    parts = spec.split(":")
    if parts[0] == "log":
        lo, hi, num = float(parts[1]), float(parts[2]), int(parts[3])
        return np.geomspace(lo, hi, num)
    if parts[0] == "lin":
        lo, hi, num = float(parts[1]), float(parts[2]), int(parts[3])
        return np.linspace(lo, hi, num)
    raise ValueError(f"unknown tgrid spec {spec!r} (use log:a:b:n or lin:a:b:n)")


def _parse_u0(spec, g):
    parts = spec.split(":")
    if parts[0] == "delta":
        return heat.delta_initial(g, int(parts[1]))
    if parts[0] == "const":
        return np.full(g.n, float(parts[1]))
    if parts[0] == "random":
        rng = np.random.default_rng(int(parts[1]))
        return rng.uniform(0.5, 2.0, g.n)
    raise ValueError(f"unknown u0 spec {spec!r}")


def _parse_alpha(spec, cfg):
    parts = spec.split(":")
    if parts[0] == "const":
        return AffineAlpha(float(parts[1]))
    if parts[0] == "affine":
        return AffineAlpha(float(parts[1]), float(parts[2]))
    if parts[0] == "profile":
        profile = parse_profile_spec(cfg.profile)
        return lambda t: alpha_phi(profile, cfg.K, cfg.n, t)[0]
    raise ValueError(f"unknown alpha spec {spec!r}")


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return value


def emit_report(report, path, fmt):
    """Write a report object with deterministic field order.

    CSV columns follow each report type's fixed schema; JSON carries the
    summary dictionary.  Floats are serialized with 17 significant digits,
    which round-trip bit-identically.
    """
    if fmt == "csv":
        report.to_csv(path)
        return
    if fmt == "json":
        if hasattr(report, "to_json"):
            report.to_json(path)
            return
        with open(path, "w") as fh:
            json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        return
    raise ValueError(f"unknown format {fmt!r}")


def _jsonable(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, (np.floating,)):
        return float(_fmt(float(obj)))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    return obj


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="licurv",
        description="verify heat-semigroup gradient estimates on weighted graphs")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, graph=True, profile=False, sweep=False):
        if graph:
            p.add_argument("--graph", required=True,
                           help="generator spec (torus:2:5, path:4, random:N:P:SEED) "
                                "or file:PATH")
            p.add_argument("--weights", default="unit", help="unit | random:SEED")
            p.add_argument("--measure", default="unit", help="unit | degree")
        if profile:
            p.add_argument("--profile", required=True,
                           help="power:G | powercubic:G | sinh2 | expsq:G | expbeta:B:SIGN")
            p.add_argument("--K", type=float, default=0.0)
            p.add_argument("--n", type=float, default=4.0)
        if sweep:
            p.add_argument("--tgrid", default="log:0.05:5:25", help="log:a:b:n | lin:a:b:n")
            p.add_argument("--u0", default="delta:0", help="delta:V | const:C | random:SEED")
        p.add_argument("--out", default="", help="output path (default stdout)")
        p.add_argument("--format", default="", help="csv | json (default by extension)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol-violation", dest="tol_violation", type=float, default=1e-9)
        p.add_argument("--save-config", default="", help="write the run config as JSON")

    p = sub.add_parser("gen", help="generate a graph and save it as JSON")
    common(p)

    p = sub.add_parser("curvature", help="per-vertex best curvature constants")
    common(p)
    p.add_argument("--n", type=float, default=4.0)

    p = sub.add_parser("heat", help="solve the heat equation and dump the trajectory")
    common(p, sweep=True)

    p = sub.add_parser("liyau", help="global gradient-estimate sweep")
    common(p, profile=True, sweep=True)

    p = sub.add_parser("liyau-local", help="ball-restricted gradient-estimate sweep")
    common(p, profile=True, sweep=True)
    p.add_argument("--x0", type=int, default=0)
    p.add_argument("--R", type=int, default=1)

    p = sub.add_parser("hamilton", help="gradient bound for bounded solutions")
    common(p, sweep=True)
    p.add_argument("--K", type=float, default=0.0)

    p = sub.add_parser("harnack", help="space-time Harnack comparison")
    common(p, profile=True, sweep=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--T1", type=float, required=True)
    p.add_argument("--T2", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)

    p = sub.add_parser("rho", help="walk transport cost between space-time points")
    common(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--T1", type=float, required=True)
    p.add_argument("--T2", type=float, required=True)
    p.add_argument("--alpha", default="const:1",
                   help="const:C | affine:C0:C1 | profile (uses --profile/--K/--n)")
    p.add_argument("--profile", default="")
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--n", type=float, default=4.0)

    p = sub.add_parser("kernel", help="heat-kernel bound bands")
    common(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--K", type=float, default=0.0)
    p.add_argument("--n", type=float, default=4.0)
    p.add_argument("--tgrid", default="log:1.5:20:25")

    sub.add_parser("selftest", help="run the acceptance suite")
    return parser


def _config_from_args(args):
    cfg = RunConfig(subcommand=args.subcommand)
    for name in vars(cfg):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    cfg.workers = max(1, int(os.environ.get("LICURV_THREADS", "1")))
    return cfg


def _write_or_print(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(cfg):
    if cfg.subcommand == "selftest":
        results = selftest.run_all()
        return 0 if all(r.passed for r in results) else 1

    g = graph_from_spec(cfg.graph, weights=cfg.weights, measure=cfg.measure)
    fmt = cfg.format or ("json" if cfg.out.endswith(".json") or not cfg.out else "csv")

    if cfg.subcommand == "gen":
        if not cfg.out:
            raise ValueError("gen needs --out")
        g.save(cfg.out)
        return 0

    if cfg.subcommand == "curvature":
        report = cde_report(g, cfg.n, CdeOptions(seed=cfg.seed), workers=cfg.workers)
        if cfg.out:
            if fmt == "csv":
                report.to_csv(cfg.out)
            else:
                payload = {"n": cfg.n, "min_K": _fmt(report.min_k),
                           "worst_vertex": report.worst_vertex(),
                           "K_star": [float(_fmt(k)) for k in report.k_star]}
                _write_or_print(json.dumps(payload, indent=2, sort_keys=True), cfg.out)
        else:
            print(f"min K*({cfg.n:g}) = {report.min_k:.6g} "
                  f"at vertex {report.worst_vertex()}")
        return 0

    if cfg.subcommand == "heat":
        sol = heat.evolve(g, _parse_u0(cfg.u0, g), _parse_tgrid(cfg.tgrid))
        if not cfg.out:
            raise ValueError("heat needs --out")
        sol.to_csv(cfg.out)
        return 0

    if cfg.subcommand in ("liyau", "liyau-local", "hamilton"):
        sol = heat.evolve(g, _parse_u0(cfg.u0, g), _parse_tgrid(cfg.tgrid))
        if cfg.subcommand == "liyau":
            profile = parse_profile_spec(cfg.profile)
            reports = [estimates.liyau_global_check(g, sol, profile, cfg.K, cfg.n)]
        elif cfg.subcommand == "liyau-local":
            profile = parse_profile_spec(cfg.profile)
            reports = [estimates.liyau_local_check(g, sol, profile, cfg.K, cfg.n,
                                                   cfg.x0, cfg.R)]
        else:
            reports = estimates.hamilton_check(g, sol, cfg.K)
        min_slack = min(r.min_slack for r in reports)
        if cfg.out:
            if len(reports) == 1:
                emit_report(reports[0], cfg.out, fmt)
            else:
                root, ext = os.path.splitext(cfg.out)
                for r in reports:
                    emit_report(r, f"{root}-{r.name}{ext}", fmt)
        for r in reports:
            vertex, t = r.argmin()
            print(f"{r.name}: min slack {r.min_slack:.6g} at (x={vertex}, t={t:.6g})")
        return 0 if min_slack >= -cfg.tol_violation else 1

    if cfg.subcommand == "harnack":
        profile = parse_profile_spec(cfg.profile)
        sol = heat.evolve(g, _parse_u0(cfg.u0, g), _parse_tgrid(cfg.tgrid))
        report = harnack.harnack_check(g, sol, cfg.x, cfg.y, cfg.T1, cfg.T2,
                                       profile, cfg.K, cfg.n, delta=cfg.delta)
        if cfg.out:
            if fmt == "csv":
                report.to_csv(cfg.out)
            else:
                payload = {"params": report.params,
                           "min_log_slack": _fmt(report.min_log_slack),
                           "forms": [{"name": f.name, "applied": f.applied,
                                      "log_slack": None if f.log_slack is None
                                      else float(_fmt(f.log_slack)),
                                      "notice": f.notice} for f in report.forms]}
                _write_or_print(json.dumps(payload, indent=2, sort_keys=True), cfg.out)
        print(f"harnack: min log-slack {report.min_log_slack:.6g} "
              f"(rho = {report.rho.rho:.6g}, k* = {report.rho.k_star})")
        return 0 if report.min_log_slack >= -cfg.tol_violation else 1

    if cfg.subcommand == "rho":
        alpha = _parse_alpha(cfg.alpha, cfg)
        if isinstance(alpha, AffineAlpha) and alpha.slope == 0.0 and alpha.const == 1.0:
            alpha = None
        result = harnack.rho_compute(g, cfg.x, cfg.y, cfg.T1, cfg.T2, alpha=alpha)
        payload = {"x": result.x, "y": result.y,
                   "T1": float(_fmt(result.t1)), "T2": float(_fmt(result.t2)),
                   "k_star": result.k_star, "rho": float(_fmt(result.rho)),
                   "feasible": result.feasible, "k_max": result.k_max}
        if cfg.out and fmt == "csv":
            result.to_csv(cfg.out)
        else:
            _write_or_print(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                            cfg.out)
        return 0

    if cfg.subcommand == "kernel":
        t_grid = _parse_tgrid(cfg.tgrid)
        report = harnack.kernel_bounds_check(g, cfg.x, cfg.y, t_grid, cfg.K, cfg.n)
        if cfg.out and fmt == "csv":
            report.to_csv(cfg.out)
        else:
            payload = {"params": report.params,
                       "bands": [{"name": b.name, "applied": b.applied,
                                  "band": None if b.band is None
                                  else float(_fmt(b.band)), "notice": b.notice}
                                 for b in report.bands],
                       "fits": [{"name": f.name, "constant": None if f.constant is None
                                 else float(_fmt(f.constant)),
                                 "min_residual": None if f.min_residual is None
                                 else float(_fmt(f.min_residual))}
                                for f in report.fits]}
            _write_or_print(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                            cfg.out)
        return 0

    raise ValueError(f"unknown subcommand {cfg.subcommand!r}")


def dispatch(argv):
    """Parse and run; returns the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    cfg = _config_from_args(args)
    if getattr(args, "save_config", ""):
        cfg.to_json(args.save_config)
    try:
        return _run(cfg)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
