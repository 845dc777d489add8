"""Command-line interface.

Subcommands: mesh-box, analyze-boundary, solve, verify-decoupling, converge,
resonance-scan. Each writes its declared outputs plus a JSON run summary and
exits 0 on success, 2 on validation/config errors, 3 when the resonance guard
refuses a solve, and 1 on internal errors. Repeated runs with the same
configuration produce byte-identical CSV/VTK outputs.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import fem, verify
from .errors import LamedecError, ResonanceError, ValidationError
from .lame import LameProblem, MaterialParams, boundary_residuals, solve_lame, traction
from .mesh import extract_boundary, generate_box_mesh, load_mesh, load_surface, save_mesh
from .surface import classify_boundary, write_curvature_report

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_RESONANCE = 3


def parse_length(text):
    """Parse a length literal; the string 'pi' maps to full-precision pi."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    if s == "pi":
        return math.pi
    try:
        return float(s)
    except ValueError as exc:
        raise ValidationError(f"cannot parse length literal '{text}'") from exc


def _triple(values, parse=float):
    vals = [parse(v) for v in values]
    if len(vals) == 1:
        vals = vals * 3
    if len(vals) != 3:
        raise ValidationError("expected one value or three values")
    return vals


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc


def config_mesh(cfg):
    dom = cfg.get("domain", {})
    if ("box" in dom) == ("mesh_path" in dom):
        raise ValidationError("config must give exactly one of domain.box / domain.mesh_path")
    if "box" in dom:
        n = _triple(dom["box"].get("n", [2]), int)
        lengths = _triple(dom["box"].get("L", ["pi"]), parse_length)
        return generate_box_mesh(n, lengths)
    return load_mesh(dom["mesh_path"])


def config_params(cfg):
    mat = cfg.get("material", {})
    try:
        return MaterialParams(lam=float(mat["lambda"]), mu=float(mat["mu"]),
                              omega=float(mat["omega"]))
    except KeyError as exc:
        raise ValidationError(f"material config missing {exc}") from exc


def config_case(cfg, params):
    src = cfg.get("source", {})
    if src.get("zero"):
        return None
    try:
        name = src["case"]
        mode = [int(v) for v in src["mode"]]
    except KeyError as exc:
        raise ValidationError(f"source config missing {exc}") from exc
    return verify.manufactured_case(name, mode, params)


def write_summary(path, payload):
    payload = dict(payload)
    payload["audit_seed"] = verify.AUDIT_SEED
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_mesh_box(args):
    n = _triple(args.n, int)
    lengths = _triple(args.L, parse_length)
    mesh = generate_box_mesh(n, lengths)
    save_mesh(mesh, args.out)
    if args.summary:
        write_summary(args.summary, {
            "command": "mesh-box", "n": n, "L": lengths,
            "num_vertices": mesh.num_vertices, "num_tets": mesh.num_tets,
            "num_boundary_facets": int(mesh.boundary_facets.shape[0]),
            "outputs": [args.out],
        })
    return EXIT_OK


def cmd_analyze_boundary(args):
    try:
        surf = extract_boundary(load_mesh(args.mesh))
    except ValidationError:
        surf = load_surface(args.mesh)
    report = classify_boundary(surf, tol_flat=args.tol_flat,
                               tol_curvature=args.tol_curvature)
    write_curvature_report(surf, report, args.report)
    included = report.curvature.included_ids()
    mean_curv = (float(np.mean(report.curvature.values[included]))
                 if included.size else 0.0)
    if args.summary:
        write_summary(args.summary, {
            "command": "analyze-boundary", "mesh": args.mesh,
            "num_patches": len(report.patches),
            "third_kind_admissible": report.third_kind_admissible,
            "fourth_kind_admissible": report.fourth_kind_admissible,
            "max_abs_curvature": report.max_abs_curvature,
            "mean_interior_curvature": mean_curv,
            "outputs": [args.report],
        })
    return EXIT_OK


def _norms_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("name", "value"))
        for name, value in rows:
            w.writerow((name, f"{value:.17g}"))


def cmd_solve(args):
    cfg = load_config(args.config)
    mesh = config_mesh(cfg)
    params = config_params(cfg)
    case = config_case(cfg, params)
    bc_kind = cfg.get("bc", case.bc_kind if case else None)
    if bc_kind not in ("third", "fourth"):
        raise ValidationError("config bc must be 'third' or 'fourth'")
    if case is not None and case.bc_kind != bc_kind:
        raise ValidationError(
            f"case {case.name} is a {case.bc_kind}-kind mode, config asks for {bc_kind}")
    source = case.f if case is not None else fem.FieldFunction.zero()
    solver = cfg.get("solver", {})
    problem = LameProblem(mesh=mesh, params=params, bc_kind=bc_kind, source=source,
                          order=int(cfg.get("order", 2)),
                          tol=float(solver.get("tol", 1e-10)),
                          max_iter=solver.get("max_iter"))
    u_h = solve_lame(problem)

    rows = []
    nrm = fem.norms(u_h, case.u if case is not None else None)
    for key in sorted(nrm):
        rows.append((key, nrm[key]))
    for key, val in sorted(boundary_residuals(u_h, bc_kind).items()):
        rows.append((f"boundary_{key}", val))
    _, tnorms = traction(u_h, params)
    for key, val in sorted(tnorms.items()):
        rows.append((f"traction_{key}", val))
    if args.out:
        _norms_csv(args.out, rows)
    if args.vtk:
        fem.export_vtk(args.vtk, mesh, displacement=u_h)
    if args.summary:
        write_summary(args.summary, {
            "command": "solve", "config": cfg,
            "norms": {k: v for k, v in rows},
            "diagnostics": u_h.diagnostics,
            "outputs": [p for p in (args.out, args.vtk) if p],
        })
    return EXIT_OK


def cmd_verify_decoupling(args):
    cfg = load_config(args.config)
    params = config_params(cfg)
    case = config_case(cfg, params)
    if case is None:
        raise ValidationError("verify-decoupling needs a manufactured case source")
    dom = cfg.get("domain", {})
    n = int(_triple(dom.get("box", {}).get("n", [8]), int)[0])
    solver = cfg.get("solver", {})
    report = verify.verify_decoupling(case, n, order=int(cfg.get("order", 2)),
                                      tol=float(solver.get("tol", 1e-10)))
    verify.write_report_csv([report], args.out)
    if args.summary:
        write_summary(args.summary, {
            "command": "verify-decoupling", "config": cfg,
            "u_errors": report.u_errors,
            "pressure": report.pressure, "shear": report.shear,
            "boundary": report.boundary, "diagnostics": report.diagnostics,
            "outputs": [args.out],
        })
    return EXIT_OK


def cmd_converge(args):
    cfg = load_config(args.config)
    params = config_params(cfg)
    case = config_case(cfg, params)
    if case is None:
        raise ValidationError("converge needs a manufactured case source")
    levels = [int(v) for v in cfg.get("levels", [2, 4, 8])]
    order = int(cfg.get("order", 2))
    solver = cfg.get("solver", {})
    rows = verify.convergence_study(case, levels, order=order,
                                    tol=float(solver.get("tol", 1e-10)))
    verify.write_convergence_csv(case, order, rows, args.out)
    if args.summary:
        write_summary(args.summary, {
            "command": "converge", "config": cfg,
            "levels": levels,
            "l2_errors": [r.l2_error for r in rows],
            "l2_rates": [r.l2_rate for r in rows[1:]],
            "graph_rates": [r.graph_rate for r in rows[1:]],
            "outputs": [args.out],
        })
    return EXIT_OK


def cmd_resonance_scan(args):
    cfg = load_config(args.config)
    mat = cfg.get("material", {})
    try:
        lam, mu = float(mat["lambda"]), float(mat["mu"])
    except KeyError as exc:
        raise ValidationError(f"material config missing {exc}") from exc
    scan = cfg.get("scan", {})
    try:
        grid = [float(v) for v in scan["sigma_grid"]]
    except KeyError as exc:
        raise ValidationError(f"scan config missing {exc}") from exc
    bc_kind = cfg.get("bc", "fourth")
    n = int(_triple(cfg.get("domain", {}).get("box", {}).get("n", [4]), int)[0])
    result = verify.resonance_scan(bc_kind, lam, mu, grid, n,
                                   order=int(cfg.get("order", 2)))
    verify.write_scan_csv(result, args.out)
    if args.summary:
        write_summary(args.summary, {
            "command": "resonance-scan", "config": cfg,
            "detected": result.detected,
            "analytic": result.analytic,
            "outputs": [args.out],
        })
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lamedec",
        description="Lame-system solves, decoupling verification and boundary analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh-box", help="generate a structured box mesh")
    p.add_argument("--n", nargs="+", required=True, help="subdivisions (1 or 3 values)")
    p.add_argument("--L", nargs="+", default=["pi"], help="edge lengths ('pi' allowed)")
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.set_defaults(func=cmd_mesh_box)

    p = sub.add_parser("analyze-boundary", help="surface curvature / admissibility report")
    p.add_argument("mesh", help="volume mesh or surface JSON file")
    p.add_argument("--report", required=True, help="CSV output path")
    p.add_argument("--tol-flat", type=float, default=1e-8)
    p.add_argument("--tol-curvature", type=float, default=1e-6)
    p.add_argument("--summary")
    p.set_defaults(func=cmd_analyze_boundary)

    p = sub.add_parser("solve", help="solve one Lame problem from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="norms CSV output path")
    p.add_argument("--vtk", help="optional VTK dump of the displacement")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify-decoupling", help="coupled vs decoupled pipelines")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_verify_decoupling)

    p = sub.add_parser("converge", help="uniform-refinement convergence study")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="rates CSV path")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("resonance-scan", help="eigenvalue estimates over a shift grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="scan CSV path")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_resonance_scan)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResonanceError as exc:
        print(f"resonance guard: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LamedecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
