"""Command-line entry point: convergence runs, mesh generation and GDM
diagnostic tables.  Exit codes: 0 success, 2 a level failed, 1 usage error."""

import argparse
import os
import sys

import numpy as np

from .errors import LepncError
from .gdm import conformity_wd, consistency_sd, poincare_cd
from .harness import FAMILIES, emit, get_case, run_family
from .mesh import write_mesh
from .space import build_space


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _levels(text):
    try:
        levels = [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad level list {text!r}")
    if not levels or levels != sorted(set(levels)):
        raise argparse.ArgumentTypeError("levels must be increasing")
    return levels


def build_parser():
    parser = _Parser(prog="lepnc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study for one test case")
    run.add_argument("--case", required=True)
    run.add_argument("--family", required=True, choices=sorted(FAMILIES))
    run.add_argument("--levels", type=_levels, default=[4, 8, 16, 32])
    run.add_argument("--varpi", type=float, default=0.0)
    run.add_argument("--condense", action="store_true")
    run.add_argument("--init", choices=["zero", "exact"], default="zero")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--format", default="csv", choices=["csv"])

    mesh = sub.add_parser("mesh", help="generate a mesh file")
    mesh.add_argument("--family", required=True, choices=sorted(FAMILIES))
    mesh.add_argument("--n", type=int, required=True)
    mesh.add_argument("--out", required=True)

    gdm = sub.add_parser("gdm", help="GDM diagnostic table")
    gdm.add_argument("--family", required=True, choices=sorted(FAMILIES))
    gdm.add_argument("--levels", type=_levels, default=[4, 8, 16, 32])
    return parser


def _cmd_run(args):
    try:
        case = get_case(args.case)
    except KeyError as exc:
        sys.stderr.write(f"lepnc: {exc.args[0]}\n")
        return 1
    report = run_family(case, args.family, args.levels, varpi=args.varpi,
                        condense=args.condense, init=args.init)
    path = None
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out,
                            f"{case.name}_{args.family}.{args.format}")
    emit(report, path, args.format)
    return 2 if any(r.error is not None for r in report.rows) else 0


def _cmd_mesh(args):
    try:
        mesh = FAMILIES[args.family](args.n)
        write_mesh(mesh, args.out)
    except (LepncError, ValueError, OSError) as exc:
        sys.stderr.write(f"lepnc: {exc}\n")
        return 2
    print(f"wrote {args.out}: {mesh.n_cells} cells, {mesh.n_faces} faces")
    return 0


def _cmd_gdm(args):
    def phi(p):
        return np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])

    def gphi(p):
        px, py = np.pi * p[:, 0], np.pi * p[:, 1]
        return np.pi * np.column_stack([np.cos(px) * np.sin(py),
                                        np.sin(px) * np.cos(py)])

    def lap_phi(p):
        return -2.0 * np.pi ** 2 * phi(p)

    print(f"{'n':>5} {'h':>10} {'C_D':>10} {'S_D':>10} {'W_D':>10}")
    failed = False
    for n in args.levels:
        try:
            mesh = FAMILIES[args.family](n)
            space = build_space(mesh)
            cd = poincare_cd(space)
            sd = consistency_sd(space, phi, gphi)
            wd = conformity_wd(space, gphi, lap_phi)
            print(f"{n:>5} {mesh.h_max:>10.4e} {cd:>10.4e} {sd:>10.4e} "
                  f"{wd:>10.4e}")
        except LepncError as exc:
            print(f"{n:>5} FAILED: {exc}")
            failed = True
    return 2 if failed else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "mesh": _cmd_mesh, "gdm": _cmd_gdm}
    try:
        return handlers[args.command](args)
    except LepncError as exc:
        sys.stderr.write(f"lepnc: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
