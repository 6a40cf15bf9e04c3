"""Command line entry point: ``melanoma-fem {mesh,simulate,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import CflViolation, ConfigError, NonDivisibleExtent, UnknownMonth
from .hybrid import FEM_BOX_3D, SimulationConfig, relative_l2, run_simulation
from .io import config_from_dict, read_boundary_series
from .mesh import assign_materials, build_box_mesh, export_vtk, mesh_stats
from .phantom import TUMOR_KINDS, SkinPhantom, analytic_tumor_volume, melanoma_model

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

FLAG_KEYS = ("month", "h", "tau", "omega", "T", "out")


def _config(args) -> SimulationConfig:
    raw = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
    for key in FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    return config_from_dict(raw)


def cmd_mesh(args) -> int:
    phantom = SkinPhantom.for_month(args.month)
    mesh = build_box_mesh(FEM_BOX_3D, args.h)
    field = assign_materials(mesh, phantom)
    stats = mesh_stats(mesh, field)
    stats["month"] = args.month
    stats["tumor_volume"] = sum(stats["tissue_volume"].get(k.name, 0.0) for k in TUMOR_KINDS)
    stats["analytic_tumor_volume"] = analytic_tumor_volume(melanoma_model(args.month))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_vtk(mesh, field, out / f"mesh_month{args.month:02d}.vtk")
    (out / f"mesh_month{args.month:02d}_stats.json").write_text(json.dumps(stats, indent=1) + "\n", encoding="utf-8")
    print(f"month {args.month}: {stats['node_count']} nodes, {stats['tet_count']} tets, "
          f"tumour volume {stats['tumor_volume']:.4g} mm^3 (analytic {stats['analytic_tumor_volume']:.4g})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _config(args)
    if config.out is None:
        raise ConfigError("out: an output directory is required (--out or config key)")
    result = run_simulation(config)
    print(f"steps={result.steps} max|E|={result.max_abs:.6g} wall={result.wall_time:.2f}s out={config.out}")
    return EXIT_OK


def _run_month(config: SimulationConfig) -> str:
    run_simulation(config)
    return config.out


def cmd_sweep(args) -> int:
    months = [int(m) for m in args.months.split(",") if m.strip()]
    for m in months:
        melanoma_model(m)
    base = _config(argparse.Namespace(**{**vars(args), "month": months[0]}))
    root = Path(args.out or base.out or ".")
    configs = [replace(base, month=m, out=str(root / f"month_{m:02d}")) for m in months]
    start = time.perf_counter()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(_run_month, configs))
    else:
        for cfg in configs:
            _run_month(cfg)
    records = [read_boundary_series(cfg.out)[1] for cfg in configs]
    matrix = np.array([[relative_l2(a, b) for b in records] for a in records])
    with open(root / "l2_difference.csv", "w", encoding="utf-8") as fh:
        fh.write("month," + ",".join(str(m) for m in months) + "\n")
        for m, row in zip(months, matrix):
            fh.write(f"{m}," + ",".join(format(v, ".17g") for v in row) + "\n")
    print(f"{len(months)} months in {time.perf_counter() - start:.1f}s; matrix -> {root / 'l2_difference.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="melanoma-fem", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="build the phantom mesh, write VTK and stats")
    p.add_argument("--month", type=int, required=True)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_mesh)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run one forward simulation"),
        ("sweep", cmd_sweep, "run several months and compare their records"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON run config; flags override its values")
        if name == "simulate":
            p.add_argument("--month", type=int)
        else:
            p.add_argument("--months", default=",".join(str(m) for m in range(0, 23, 2)),
                           help="comma separated months (default: all twelve)")
            p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--h", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--omega", type=float)
        p.add_argument("--T", type=float)
        p.add_argument("--out")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, UnknownMonth, NonDivisibleExtent) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CflViolation as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
