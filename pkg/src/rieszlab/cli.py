"""Command line entry point ``lab``.

``lab run <experiment> [--config PATH] [--out DIR] [--seed N]``
``lab accept [--out DIR] [--criteria K ...]``
``lab mesh export PATH --kind KIND --resolution N [--param key=value ...]``
``lab mesh import PATH [--polyline --resolution N --open]``
``lab list``

Exit codes: 0 when every assertion passes, 1 on an assertion failure,
2 on a configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import (
    CRITERIA,
    REGISTRY,
    ConfigError,
    default_config,
    load_config,
    run_acceptance,
    run_experiment,
)
from .geometry import KINDS, make_mesh, mesh_from_csv, mesh_to_csv, polyline_from_csv

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parse_param(text: str):
    if "=" not in text:
        raise ConfigError(f"mesh parameter {text!r} is not key=value")
    key, value = text.split("=", 1)
    parts = [p.strip() for p in value.split(",") if p.strip()]
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"mesh parameter {key!r} must be numeric") from exc
    return key.strip(), nums[0] if len(nums) == 1 else tuple(nums)


def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.experiment) if args.config else default_config(args.experiment)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, out=args.out)
    try:
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {cfg.out} is not writable: {exc}") from exc
    status, result, runtime = run_experiment(cfg)
    for a in result.assertions:
        mark = "pass" if a.passed else "FAIL"
        print(f"{mark}  {a.name}: {a.value:.6g} {a.relation} {a.limit:.6g}")
    verdict = "passed" if status == EXIT_PASS else "failed"
    print(f"{cfg.name} {verdict} in {runtime:.2f} s; results in {Path(cfg.out) / cfg.name}")
    return status


def _cmd_accept(args) -> int:
    wanted = args.criteria or sorted(CRITERIA)
    bad = [k for k in wanted if k not in CRITERIA]
    if bad:
        raise ConfigError(f"unknown criteria {bad}; expected 1..{len(CRITERIA)}")
    outcomes = run_acceptance(wanted, args.out, echo=print)
    ok = all(o.passed for o in outcomes)
    print(f"acceptance: {sum(o.passed for o in outcomes)}/{len(outcomes)} criteria passed")
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_mesh(args) -> int:
    path = Path(args.path)
    if args.action == "export":
        if args.kind not in KINDS or args.kind == "graph2d":
            raise ConfigError(f"exportable kinds: {[k for k in KINDS if k != 'graph2d']}")
        params = dict(_parse_param(p) for p in args.param)
        if "n" in params:
            params["n"] = int(params["n"])
        if args.kind == "polyline":
            raise ConfigError("build polylines with 'lab mesh import --polyline'")
        try:
            mesh = make_mesh(args.kind, args.resolution, **params)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        path.write_text(mesh_to_csv(mesh))
        print(f"wrote {mesh.size} nodes to {path}")
        return EXIT_PASS
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if args.polyline:
            mesh = polyline_from_csv(text, args.resolution, closed=not args.open)
        else:
            mesh = mesh_from_csv(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    info = {
        "n": mesh.n,
        "kind": mesh.params.get("source_kind", mesh.kind),
        "nodes": mesh.size,
        "closed": mesh.closed,
        "h": mesh.h,
        "total_measure": mesh.total_measure,
    }
    print(json.dumps(info, sort_keys=True))
    if args.polyline and args.write:
        Path(args.write).write_text(mesh_to_csv(mesh))
    return EXIT_PASS


def _cmd_list(args) -> int:
    for name in sorted(REGISTRY):
        para = (REGISTRY[name].__doc__ or "").strip().split("\n\n")[0]
        print(f"{name:22s} {' '.join(line.strip() for line in para.splitlines())}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lab", description="Harmonic-analysis experiment runner.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one named experiment")
    run.add_argument("experiment")
    run.add_argument("--config", help="INI config file (defaults are used when omitted)")
    run.add_argument("--out", help="output directory (default: from config, else ./results)")
    run.add_argument("--seed", type=int)
    run.set_defaults(func=_cmd_run)

    acc = sub.add_parser("accept", help="run the acceptance suite")
    acc.add_argument("--out", help="write experiment outputs and acceptance.json here")
    acc.add_argument("--criteria", type=int, nargs="*", help="subset of criterion numbers")
    acc.set_defaults(func=_cmd_accept)

    mesh = sub.add_parser("mesh", help="mesh CSV export and import")
    mesh.add_argument("action", choices=("export", "import"))
    mesh.add_argument("path")
    mesh.add_argument("--kind", default="circle")
    mesh.add_argument("--resolution", type=int, default=256)
    mesh.add_argument("--param", action="append", default=[], help="mesh parameter key=value")
    mesh.add_argument("--polyline", action="store_true", help="import a CSV of polyline vertices")
    mesh.add_argument("--open", action="store_true", help="polyline is open")
    mesh.add_argument("--write", help="with --polyline: also write the built mesh CSV here")
    mesh.set_defaults(func=_cmd_mesh)

    ls = sub.add_parser("list", help="list the experiments")
    ls.set_defaults(func=_cmd_list)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
