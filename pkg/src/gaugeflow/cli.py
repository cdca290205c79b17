"""Command-line interface: experiment runs, oracle verification, and a
reference geometry demo.

Subcommands
-----------
``run``            integrate a film relaxation from a TOML config (flags
                   override config keys) and write CSV/JSON outputs
``verify``         run oracle suites by selector and emit a JSON report
``demo-geometry``  print curvature summaries of the reference patches
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .deformation import GaugeSpec, TimeDerivSpec, VECTOR_GAUGES
from .errors import BadConfig, GaugeflowError, ParseError, ValidationError
from .flatflow import FlowConfig, InitialCondition
from . import runio
from .verification import SELECTORS, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaugeflow",
        description="Gauge-consistent gradient flows of a periodic film "
                    "with a tangential director field.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate a relaxation experiment")
    p_run.add_argument("--config", type=Path, default=None,
                       help="TOML config file (defaults used when omitted)")
    p_run.add_argument("--out", type=Path, default=None,
                       help="output directory (default runs/<gauge>-<timederiv>)")
    p_run.add_argument("--gauge", choices=VECTOR_GAUGES, default=None)
    p_run.add_argument("--timederiv", choices=VECTOR_GAUGES, default=None)
    p_run.add_argument("--allow-inconsistent", action="store_true",
                       help="permit gauge != timederiv (not energy-dissipative)")
    p_run.add_argument("--t-end", type=float, default=None)
    p_run.add_argument("--n", type=int, default=None)
    p_run.add_argument("--scheme", choices=("spectral", "central"), default=None)
    p_run.add_argument("--no-dealias", action="store_true",
                       help="disable the band-limited evolution (study mode)")
    p_run.add_argument("--stop-gradnorm", type=float, default=None,
                       help="stop early once the gradient norm drops below this")
    p_run.add_argument("--winding", type=float, default=None,
                       help="twist turns of the initial director")
    p_run.add_argument("--width", type=float, default=None,
                       help="relative width of the initial twist ramp")

    p_ver = sub.add_parser("verify", help="run oracle suites")
    p_ver.add_argument("--selector", choices=SELECTORS, default="all")
    p_ver.add_argument("--json", type=Path, default=None,
                       help="write the JSON report here (default stdout)")

    sub.add_parser("demo-geometry",
                   help="print curvature tables of the reference patches")
    return parser


def _apply_overrides(cfg: FlowConfig, args: argparse.Namespace) -> FlowConfig:
    updates: dict = {}
    if args.gauge is not None:
        updates["gauge"] = GaugeSpec(rank=1, kind=args.gauge)
    if args.timederiv is not None:
        updates["timederiv"] = TimeDerivSpec(rank=1, kind=args.timederiv)
    if args.allow_inconsistent:
        updates["allow_inconsistent"] = True
    if args.t_end is not None:
        updates["t_end"] = args.t_end
    if args.n is not None:
        updates["n"] = args.n
    if args.scheme is not None:
        updates["scheme"] = args.scheme
    if args.no_dealias:
        updates["dealias"] = False
    if args.stop_gradnorm is not None:
        updates["stop_gradnorm"] = args.stop_gradnorm
    if args.winding is not None or args.width is not None:
        ic = cfg.initial_condition
        updates["initial_condition"] = InitialCondition(
            family=ic.family,
            winding=ic.winding if args.winding is None else args.winding,
            width=ic.width if args.width is None else args.width,
        )
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_run(args: argparse.Namespace) -> int:
    if args.config is not None:
        cfg = runio.load_config(args.config)
    else:
        cfg = FlowConfig()
    cfg = _apply_overrides(cfg, args)
    cfg.validate()
    outdir = args.out
    if outdir is None:
        outdir = Path("runs") / f"{cfg.gauge.kind}-{cfg.timederiv.kind}"
    return runio.run_experiment(cfg, outdir)


def _cmd_verify(args: argparse.Namespace) -> int:
    result = run_suite(args.selector)
    payload = {"schema": runio.REPORT_SCHEMA, **result}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.json is not None:
        args.json.parent.mkdir(parents=True, exist_ok=True)
        args.json.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    failed = [r["name"] for r in payload["reports"] if not r["passed"]]
    if failed:
        print("FAILED: " + "; ".join(failed), file=sys.stderr)
        return 1
    return 0


def _cmd_demo_geometry() -> int:
    from .geometry import build_geometry
    from .grid import ParameterGrid
    from .surfaces import (SurfacePatch, flat_chart, graph_chart,
                           sin_cos_height, sphere_band)

    def show(name, geo):
        H, K = geo.H, geo.Kgauss
        print(f"{name:28s}  H in [{H.min():+.6f}, {H.max():+.6f}]   "
              f"K in [{K.min():+.6f}, {K.max():+.6f}]")

    grid = ParameterGrid(48, 48, 1 / 48, 1 / 48, scheme="spectral")
    show("flat torus chart", build_geometry(SurfacePatch.from_chart(grid, flat_chart())))
    show("unit sphere band", build_geometry(sphere_band(48, 64)))
    show("sin/cos graph patch",
         build_geometry(SurfacePatch.from_chart(grid, graph_chart(sin_cos_height()))))
    print("conventions: inward-curving sphere has H=-2, K=+1 (outward normal)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "demo-geometry":
            return _cmd_demo_geometry()
    except (ParseError, ValidationError, BadConfig) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GaugeflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
