"""Command-line entry point: ``fftproj <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import fields

import numpy as np

from . import io
from .grid import Grid, build_wavevectors
from .projection import (
    FINITE_STRAIN,
    SMALL_STRAIN,
    InadmissibleSchemeError,
    build_projection,
    build_small_strain_projection,
)
from .scenarios import ScenarioConfig, compare_schemes, run_scenario
from .stencils import SCHEMES, DerivativeScheme


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value file or a manifest.json to replay")
    for f in fields(ScenarioConfig):
        parser.add_argument(
            "--" + f.name.replace("_", "-"), dest=f.name, default=None,
            help=f"override '{f.name}' (comma-separated for lists)",
        )


def _scenario_config(args) -> ScenarioConfig:
    data = io.read_config(args.config) if args.config else {}
    for f in fields(ScenarioConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = io.parse_value(value)
    if "scenario" not in data:
        raise SystemExit("error: no scenario given (use --config or --scenario)")
    return ScenarioConfig.from_dict(data)


def _grid(args) -> Grid:
    return Grid((args.nx, args.ny or args.nx))


def cmd_solve(args) -> int:
    manifest = run_scenario(_scenario_config(args))
    results = manifest["results"]
    for key in ("ringing_score", "max_residual", "inclusion_mean_rel_error",
                "right_left_ratio", "final_damage_fraction"):
        if key in results:
            print(f"{key} = {results[key]!r}")
    print(f"status = {manifest['status']}")
    return 0 if manifest["status"] == "ok" else 1


def cmd_validate_eshelby(args) -> int:
    cfg = ScenarioConfig(
        scenario="eshelby", scheme=args.scheme, nx=args.nx, ny=args.nx,
        images=args.images, output_dir=args.output_dir,
    )
    manifest = run_scenario(cfg)
    res = manifest["results"]
    if manifest["status"] != "ok":
        print(f"status = {manifest['status']}: {manifest.get('message', '')}")
        return 1
    print(f"grid = {args.nx}x{args.nx}, scheme = {args.scheme}")
    print(f"load strain (image-corrected cell mean) = {np.asarray(res['load_strain']).ravel()}")
    print(f"analytic inclusion mean = {np.asarray(res['analytic_inclusion_mean']).ravel()}")
    print(f"numeric inclusion mean  = {np.asarray(res['numeric_inclusion_mean']).ravel()}")
    print(f"relative error = {res['inclusion_mean_rel_error']:.6e}")
    print(f"field L2 relative error = {res['field_rel_error_l2']:.6e}")
    return 0


def cmd_dump_symbols(args) -> int:
    grid = _grid(args)
    scheme = DerivativeScheme(args.scheme)
    d = scheme.symbols(grid)
    modes = build_wavevectors(grid).modes
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    writer = csv.writer(out)
    writer.writerow(["I", "J", "m_x", "m_y", "q", "alpha", "re", "im"])
    for i in range(grid.nb_pts[0]):
        for j in range(grid.nb_pts[1]):
            for q in range(d.shape[2]):
                for a in range(d.shape[3]):
                    v = d[i, j, q, a]
                    writer.writerow([i, j, modes[i, j, 0], modes[i, j, 1], q, a,
                                     io.FLOAT_FMT % v.real, io.FLOAT_FMT % v.imag])
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_dump_projection(args) -> int:
    grid = _grid(args)
    build = build_projection if args.formulation == FINITE_STRAIN else build_small_strain_projection
    try:
        op = build(grid, args.scheme, allow_unsafe=args.allow_unsafe)
    except InadmissibleSchemeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    i, j = args.k
    block = op.blocks[i % grid.nb_pts[0], j % grid.nb_pts[1]]
    modes = build_wavevectors(grid).modes[i % grid.nb_pts[0], j % grid.nb_pts[1]]
    print(f"# {args.formulation} block of {args.scheme} at k index ({i}, {j}), modes {tuple(int(m) for m in modes)}")
    with np.printoptions(precision=6, suppress=True, linewidth=160):
        print(block)
    return 0


def cmd_compare_schemes(args) -> int:
    cfg = _scenario_config(args)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()] if args.schemes else list(SCHEMES)
    table = compare_schemes(cfg, schemes)
    print(f"{'scheme':<18} {'status':<8} {'ringing':>12} {'residual':>12} {'error':>12}")
    for row in table:
        cells = [
            f"{row[key]:.4e}" if isinstance(row[key], float) else "-"
            for key in ("ringing_score", "max_residual", "error")
        ]
        print(f"{row['scheme']:<18} {row['status']:<8} " + " ".join(f"{c:>12}" for c in cells))
    return 0 if all(row["status"] in ("ok", "skipped") for row in table) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fftproj", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a scenario from a config file")
    _add_config_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate-eshelby", help="compare a solve with the analytic inclusion")
    p.add_argument("--scheme", default="fe_linear", choices=SCHEMES)
    p.add_argument("--nx", type=int, default=151)
    p.add_argument("--images", type=int, default=5)
    p.add_argument("--output-dir", default="out/eshelby")
    p.set_defaults(func=cmd_validate_eshelby)

    p = sub.add_parser("dump-symbols", help="write derivative symbols as CSV")
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_dump_symbols)

    p = sub.add_parser("dump-projection", help="print the projection block at one wavevector")
    p.add_argument("--scheme", required=True, choices=SCHEMES)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int)
    p.add_argument("--k", type=int, nargs=2, metavar=("I", "J"), required=True)
    p.add_argument("--formulation", default=FINITE_STRAIN, choices=(FINITE_STRAIN, SMALL_STRAIN))
    p.add_argument("--allow-unsafe", action="store_true", help="skip the even-grid admissibility check")
    p.set_defaults(func=cmd_dump_projection)

    p = sub.add_parser("compare-schemes", help="run a scenario once per scheme")
    _add_config_flags(p)
    p.add_argument("--schemes", help="comma-separated list (default: all)")
    p.set_defaults(func=cmd_compare_schemes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
