"""Command-line entry point: dims, tabulate, verify, plate and mesh-gen.

Exit codes: 0 success, 1 numerical failure (including a failed verification),
2 argument errors.
"""

import argparse
import json
import sys

import numpy as np

from .conformance import default_dim, interface_jump
from .mesh import dumps_mesh, lshape_mesh, strip_mesh
from .plates import FORMULATIONS, run_example
from .templates import FAMILIES, FAMILY_DIMS
from .tensor_elements import build_element, element_dim

JUMP_TOLERANCE = 1e-10


class ArgumentError(Exception):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def write_rows(rows, columns, out, fmt="csv", trailer=None):
    if fmt == "csv":
        out.write(",".join(columns) + "\n")
        for r in rows:
            out.write(",".join(_fmt(r[c]) for c in columns) + "\n")
    else:
        for r in rows:
            out.write(json.dumps({c: _jsonable(r[c]) for c in columns}) + "\n")
    if trailer:
        if fmt == "csv":
            out.write("# " + ",".join(f"{k}={_fmt(v)}" for k, v in trailer.items()) + "\n")
        else:
            out.write(json.dumps({"summary": {k: _jsonable(v) for k, v in trailer.items()}}) + "\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_dims(args, out):
    rows = []
    for fam in FAMILIES:
        for dim in FAMILY_DIMS[fam]:
            for p in range(1, args.pmax + 1):
                rows.append(dict(family=fam, dim=dim, p=p, count=len(build_element(fam, dim, p)),
                                 formula=element_dim(fam, dim, p)))
    write_rows(rows, ["family", "dim", "p", "count", "formula"], out, args.format)
    return 0 if all(r["count"] == r["formula"] for r in rows) else 1


def _load_points(path, dim):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ArgumentError(f"cannot read points file: {exc}") from exc
    lines = [ln.split("#")[0].replace(",", " ").split() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    try:
        pts = np.array([[float(v) for v in ln] for ln in lines])
    except ValueError as exc:
        raise ArgumentError(f"points file is not numeric: {exc}") from exc
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise ArgumentError(f"points file must have {dim} columns")
    return pts


def cmd_tabulate(args, out):
    dim = args.dim or default_dim(args.family)
    if dim not in FAMILY_DIMS[args.family]:
        raise ArgumentError(f"family {args.family} is not defined in {dim}D")
    space = build_element(args.family, dim, args.order)
    pts = _load_points(args.points, dim)
    values, _ = space.tabulate(pts)
    comps = [f"v{i}{j}" for i in range(dim) for j in range(dim)]
    rows = []
    for q in range(len(pts)):
        for a, f in enumerate(space.functions):
            r = dict(point=q, function=a, owner=repr(f.owner), connectivity=repr(f.connectivity))
            r.update(zip(comps, values[a, q].ravel()))
            rows.append(r)
    write_rows(rows, ["point", "function", "owner", "connectivity"] + comps, out, args.format)
    return 0


def cmd_verify(args, out):
    dim = args.dim or default_dim(args.family)
    if dim not in FAMILY_DIMS.get(args.family, (2, 3)):
        raise ArgumentError(f"family {args.family} is not defined in {dim}D")
    rep = interface_jump(args.family, args.order, args.trials, args.geometry, args.seed, dim)
    row = rep.row()
    row["passed"] = rep.max_jump < JUMP_TOLERANCE
    write_rows([row], ["family", "dim", "p", "geometry", "trials", "max_jump", "passed"], out,
               args.format)
    return 0 if row["passed"] else 1


def cmd_plate(args, out):
    result, _ = run_example(args.example, args.formulation, args.order, args.level, args.seed)
    if args.example == 1:
        write_rows(result, ["elements", "total_dofs", "connected_dofs", "myy_max"], out, args.format)
    else:
        rows, summary = result
        write_rows(rows, ["x", "y", "norm_M"], out, args.format, trailer=summary)
    return 0


def cmd_mesh_gen(args, out):
    mesh = strip_mesh(args.level, args.seed) if args.example == 1 else lshape_mesh(args.level, args.seed)
    out.write(dumps_mesh(mesh))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="tensorfem", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, formats=True):
        p.add_argument("--out", default="-", help="output path (default: stdout)")
        if formats:
            p.add_argument("--format", choices=("csv", "json-lines"), default="csv")

    p = sub.add_parser("dims", help="dimension table for all families")
    p.add_argument("--pmax", type=int, default=4)
    common(p)
    p = sub.add_parser("tabulate", help="reference basis values at points")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--points", required=True, help="file with one point per line")
    common(p)
    p = sub.add_parser("verify", help="interface trace jumps on random element pairs")
    p.add_argument("--family", choices=FAMILIES + ("N2", "BDM", "RT", "CG"), required=True)
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--geometry", choices=("affine", "curved"), default="affine")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p = sub.add_parser("plate", help="run a plate experiment")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--formulation", choices=FORMULATIONS, required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p = sub.add_parser("mesh-gen", help="write a generated example mesh")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    common(p, formats=False)
    return ap


COMMANDS = {"dims": cmd_dims, "tabulate": cmd_tabulate, "verify": cmd_verify,
            "plate": cmd_plate, "mesh-gen": cmd_mesh_gen}


def run_cli(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "pmax", 1) < 1 or getattr(args, "order", 1) < 1 or getattr(args, "trials", 1) < 1:
        print("error: --pmax, --order and --trials must be positive", file=sys.stderr)
        return 2
    out, close = None, False
    try:
        out, close = _open_out(args.out)
        return COMMANDS[args.command](args, out)
    except (ArgumentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, ArithmeticError, RuntimeError, NotImplementedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    finally:
        if close:
            out.close()


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
