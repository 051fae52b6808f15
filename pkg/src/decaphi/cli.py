"""Command-line entry point: ``decaphi {mesh-info,solve,bands} --config run.json``.

Exit codes: 0 success, 2 configuration error, 3 mesh error, 4 solver
failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .boundary import classify_boundary
from .config import load_config
from .errors import ConfigError, DecError, IoFailure, MeshError, SolverError
from .io import export_bands, export_results
from .mesh import build_incidence, validate_complex
from .postprocess import export_fields
from .runner import load_mesh, output_path, prepare, run_bands, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4, 5


def exit_code(err: BaseException) -> int:
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, MeshError):
        return EXIT_MESH
    if isinstance(err, SolverError):
        return EXIT_SOLVER
    if isinstance(err, (IoFailure, OSError)):
        return EXIT_IO
    return 1


def cmd_mesh_info(args) -> int:
    cfg = load_config(args.config)
    cx = load_mesh(cfg)
    inc = build_incidence(cx)
    rep = validate_complex(cx, inc)
    bc = classify_boundary(cx, inc)
    print(rep.summary())
    print(f"boundary nodes: {len(bc.nodes)} boundary edges: {len(bc.edges)}")
    return EXIT_OK


def _fmt_opt(v, spec=".4e"):
    return "-" if v is None else format(v, spec)


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    if cfg.mode != "driven" or cfg.port is None:
        raise ConfigError("solve needs a port and a non-periodic boundary")
    if not cfg.frequencies:
        raise ConfigError("solve needs at least one frequency")
    pb = prepare(cfg)
    results = run_sweep(pb, tandem=args.tandem_phi, threads=args.threads, keep_fields=args.export_fields)

    export_results([r.record() for r in results], output_path(args.output_dir, cfg.output.sweep_csv))
    if args.export_fields:
        for r in results:
            if r.solution is not None:
                name = f"{cfg.output.fields_prefix}_{r.freq_hz:.6e}Hz.vtk"
                export_fields(r.solution, pb.cx, output_path(args.output_dir, name))

    head = f"{'freq_hz':>12} {'R':>12} {'L':>12} {'C':>12} {'residual':>10} {'ampere':>10} {'gauss':>10}"
    if args.tandem_phi:
        head += f" {'phi_diff':>10}"
    print(head)
    failed = 0
    for r in results:
        if r.error is not None:
            failed += 1
            print(f"{r.freq_hz:12.4e} FAILED: {r.error}")
            continue
        ro, mx = r.readout, r.maxwell
        line = (f"{r.freq_hz:12.4e} {ro.R:12.5e} {_fmt_opt(ro.L, '12.5e'):>12} {_fmt_opt(ro.C, '12.5e'):>12} "
                f"{r.residual:10.2e} {mx.ampere:10.2e} {mx.gauss:10.2e}")
        if args.tandem_phi:
            line += f" {r.tandem_diff:10.2e}"
        print(line)
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_bands(args) -> int:
    cfg = load_config(args.config)
    if cfg.mode != "eigen":
        raise ConfigError("bands needs boundary type 'pbc'")
    pb = prepare(cfg)
    rows = run_bands(pb)
    export_bands([(r.kx, r.ky, r.mode_index, r.freq_hz) for r in rows],
                 output_path(args.output_dir, cfg.output.bands_csv))
    print(f"{'kx':>12} {'ky':>12} {'mode':>4} {'freq_hz':>14}")
    for r in rows:
        flag = "  near-zero" if r.near_zero else ""
        print(f"{r.kx:12.5e} {r.ky:12.5e} {r.mode_index:4d} {r.freq_hz:14.6e}{flag}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="decaphi", description="Gauge-stabilized A-Phi Maxwell solver.")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--output-dir", default=".", help="directory for CSV and field files")
    common.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("mesh-info", parents=[common], help="print mesh counts and checks").set_defaults(func=cmd_mesh_info)
    p = sub.add_parser("solve", parents=[common], help="driven frequency sweep")
    p.add_argument("--tandem-phi", action="store_true", help="also solve the Phi system and compare")
    p.add_argument("--export-fields", action="store_true", help="write a field file per frequency")
    p.add_argument("--threads", type=int, default=1, help="sweep points solved concurrently")
    p.set_defaults(func=cmd_solve)
    sub.add_parser("bands", parents=[common], help="Bloch eigenfrequencies").set_defaults(func=cmd_bands)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except DecError as err:
        print(f"error: {err}", file=sys.stderr)
        return exit_code(err)


if __name__ == "__main__":
    sys.exit(main())
