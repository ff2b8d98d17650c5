"""Command-line front end.

Every command takes one or more meshes: a path to a MeshSpec JSON file, or
the name of a bundled mesh (see ``hbforms meshes``). ``--generate NAME``
with ``--param key=value`` builds a mesh from a generator instead.

Exit codes: 0 ok, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assembly import GeometryMap, assemble, integrate_basis
from .eigensolve import (
    NumericalError,
    detect_spurious,
    maxwell_primal,
    maxwell_mixed_grad,
    maxwell_mixed_curl,
    square_spectrum,
    stokes_infsup,
    stokes_solve,
)
from .exactness import exactness_report
from .hierarchy import HierarchicalComplex
from .meshes import MeshSpec, MeshValidationError, generate_mesh, golden_names, load_golden

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


@dataclass
class ResultRecord:
    command: str
    mesh: str
    digest: str
    outputs: dict
    wall_time: float = field(default=0.0)


def _parse_value(v: str):
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    if v.lower() in ("none", "null"):
        return None
    if v.lower() in ("true", "false"):
        return v.lower() == "true"
    return v


def load_mesh(ref: str) -> MeshSpec:
    path = Path(ref)
    if path.exists():
        return MeshSpec.load(path)
    if ref in golden_names():
        return load_golden(ref)
    raise MeshValidationError(f"no mesh file or bundled mesh named {ref!r}")


def _meshes(args) -> list[tuple[str, MeshSpec]]:
    out = []
    if args.generate:
        params = {}
        for kv in args.param or []:
            if "=" not in kv:
                raise MeshValidationError(f"--param expects key=value, got {kv!r}")
            k, v = kv.split("=", 1)
            params[k] = _parse_value(v)
        mesh = generate_mesh(args.generate, **params)
        out.append((f"{args.generate}({', '.join(f'{k}={v}' for k, v in params.items())})", mesh))
    for ref in args.mesh:
        out.append((ref, load_mesh(ref)))
    if not out:
        raise MeshValidationError("no mesh given")
    for _, mesh in out:
        mesh.validate()
    return out


# --- commands -----------------------------------------------------------------

def cmd_dims(mesh: MeshSpec, args) -> dict:
    hc = HierarchicalComplex(mesh.to_ladder(), args.orientation, bc=not args.no_bc)
    d0, d1, d2 = hc.dims
    return {"dim0": d0, "dim1": d1, "dim2": d2, "residual": d0 + d2 - d1 - 1,
            "condition_holds": d0 + d2 - d1 == 1}


def cmd_exactness(mesh: MeshSpec, args) -> dict:
    hc = HierarchicalComplex(mesh.to_ladder(), args.orientation, bc=not args.no_bc)
    return exactness_report(hc, args.seed).to_dict()


def cmd_maxwell(mesh: MeshSpec, args) -> dict:
    hc = HierarchicalComplex(mesh.to_ladder(), "standard")
    geom = GeometryMap((args.side, args.side))
    K = assemble("curlcurl", hc, geom).matrix
    M1 = assemble("mass_1", hc, geom).matrix
    s_primal = maxwell_primal(K, M1, args.zero_tol)
    s_grad = maxwell_mixed_grad(K, M1, assemble("grad_coupling", hc, geom).matrix, args.zero_tol)
    s_curl = maxwell_mixed_curl(assemble("curl_coupling", hc, geom).matrix, M1, assemble("mass_2", hc, geom).matrix,
                       integrate_basis(hc, 2, geom), args.zero_tol)
    n = args.first_n
    exact = square_spectrum(4 * n + 20, args.side)
    rep = detect_spurious(s_primal.nonzero, exact, n, args.spurious_tol)
    return {
        "dims": list(hc.dims),
        "primal_zeros": s_primal.n_zeros,
        "mixed_grad_zeros": s_grad.n_zeros,
        "mixed_curl_zeros": s_curl.n_zeros,
        "primal_nonzero": s_primal.nonzero[:n].tolist(),
        "mixed_grad_nonzero": s_grad.nonzero[:n].tolist(),
        "mixed_curl_nonzero": s_curl.nonzero[:n].tolist(),
        "exact": exact[:n].tolist(),
        "spurious_ranks": rep.spurious,
        "spurious_free": rep.spurious_free,
    }


def cmd_infsup(mesh: MeshSpec, args) -> dict:
    hc = HierarchicalComplex(mesh.to_ladder(), "rotated")
    beta = stokes_infsup(hc, cpen=args.cpen, norm=args.norm)
    return {"n0": mesh.level0[0], "levels": len(mesh.levels) + 1, "dim_velocity": hc.dims[1],
            "dim_pressure": hc.dims[2], "beta": beta}


def cmd_cavity(mesh: MeshSpec, args) -> dict:
    ladder = mesh.to_ladder()
    hc = HierarchicalComplex(ladder, "rotated")
    free = HierarchicalComplex(ladder, "rotated", bc=False)
    sol = stokes_solve(hc, nu=args.nu, cpen=args.cpen)
    probe = np.array([args.probe])
    omega = float(sol.vorticity(probe)[0])
    rng = np.random.default_rng(args.seed)
    pts = rng.random((args.n_points, 2))
    div_max = float(np.max(np.abs(sol.divergence(pts))))
    # div u_h lies in the pressure space, so its L2 norm is exact through the 2-form mass matrix
    c = hc.hier_diff_matrix(1).to_scipy() @ sol.velocity
    M2 = assemble("mass_2", hc).matrix
    div_l2 = float(np.sqrt(max(c @ (M2 @ c), 0.0)))
    n_elem = int(sum(ladder.elements(l).sum() for l in range(ladder.n_levels)))
    return {"probe_x": args.probe[0], "probe_y": args.probe[1], "vorticity": omega, "elements": n_elem,
            "unknowns": free.dims[1] + free.dims[2], "div_max": div_max, "div_l2": div_l2}


COMMANDS = {
    "dims": cmd_dims,
    "exactness": cmd_exactness,
    "maxwell-eig": cmd_maxwell,
    "infsup": cmd_infsup,
    "cavity": cmd_cavity,
}


# --- output ---------------------------------------------------------------------

def _scalar_items(d: dict) -> dict:
    return {k: v for k, v in d.items() if not isinstance(v, (list, dict, tuple))}


def render(records: list[ResultRecord], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([asdict(r) for r in records], indent=1, default=_jsonable) + "\n"
    if fmt == "text" and len(records) == 1 and records[0].command == "exactness":
        from .exactness import ExactnessReport, LevelReport
        o = dict(records[0].outputs)
        o.pop("verdict", None)
        o["levels"] = [LevelReport(**lv) for lv in o["levels"]]
        return ExactnessReport(**o).to_text() + "\n"
    # csv: one row per mesh, scalar outputs only; no timings so reruns are byte-identical
    rows = [{"mesh": r.mesh, "digest": r.digest[:12], **_scalar_items(r.outputs)} for r in records]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hbforms", description="Hierarchical B-spline complexes: exactness and stability.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("mesh", nargs="*", help="MeshSpec JSON file or bundled mesh name")
        p.add_argument("--generate", metavar="NAME", help="build the mesh with a generator")
        p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter (repeatable)")
        p.add_argument("--out", help="write here instead of stdout")
        p.add_argument("--format", choices=["csv", "json", "text"], help="default: from --out suffix, else csv")
        p.add_argument("--seed", type=int, default=0, help="seed for modular-rank primes and random points")
        p.add_argument("--no-timing", action="store_true", help="zero the wall time in JSON output")
        return p

    for name in ("dims", "exactness"):
        p = common(sub.add_parser(name))
        p.add_argument("--orientation", choices=["standard", "rotated"], default="standard")
        p.add_argument("--no-bc", action="store_true", help="no boundary conditions")
    p = common(sub.add_parser("maxwell-eig"))
    p.add_argument("--side", type=float, default=float(np.pi), help="square side length (default pi)")
    p.add_argument("--zero-tol", type=float, default=1e-8, help="relative threshold for zero eigenvalues")
    p.add_argument("--spurious-tol", type=float, default=0.02, help="relative matching tolerance")
    p.add_argument("--first-n", type=int, default=50)
    p = common(sub.add_parser("infsup"))
    p.add_argument("--cpen", type=float, default=None, help="boundary penalty (default 5 x degree)")
    p.add_argument("--norm", choices=["grad", "sym"], default="grad")
    p = common(sub.add_parser("cavity"))
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--cpen", type=float, default=None)
    p.add_argument("--probe", type=float, nargs=2, default=[0.0, 0.95], metavar=("X", "Y"))
    p.add_argument("--n-points", type=int, default=100, help="random points for the divergence check")
    sub.add_parser("meshes", help="list bundled meshes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "meshes":
        for name in golden_names():
            mesh = load_golden(name)
            print(f"{name}\t{mesh.description or ''}")
        return EXIT_OK
    try:
        records = []
        for label, mesh in _meshes(args):
            t = time.perf_counter()
            outputs = COMMANDS[args.command](mesh, args)
            wall = 0.0 if args.no_timing else time.perf_counter() - t
            records.append(ResultRecord(args.command, label, mesh.digest(), outputs, wall))
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as e:
        diag = getattr(e, "diagnostics", {})
        print(json.dumps({"error": str(e), "diagnostics": diag}, default=_jsonable), file=sys.stderr)
        return EXIT_NUMERICAL
    except (MeshValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    fmt = args.format or (Path(args.out).suffix.lstrip(".") if args.out else "csv")
    if fmt not in ("csv", "json", "text"):
        fmt = "csv"
    text = render(records, fmt)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
