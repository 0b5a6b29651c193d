"""Command-line interface.

``fracbpx <subcommand>`` drives the benchmark runners (``table-uniform``,
``table-graded``, ``convergence``, ``verify``) and a one-shot ``solve``
command.  Benchmark subcommands print the CSV to stdout unless ``--out``
is given; ``solve`` prints a short human-readable report and can dump
the assembled matrix and mesh in their versioned text formats.
"""

from __future__ import annotations

import argparse
import sys

from .assembly import (
    QuadratureSpec,
    assemble_fractional_stiffness,
    assemble_load,
    save_matrix,
)
from .bench import ExperimentSpec, run
from .hierarchy import build_uniform_hierarchy
from .mesh import init_square, save_mesh
from .precond import (
    DEFAULT_GAMMA_TILDE_UNIFORM,
    bpx_uniform,
    diag_scaling,
)
from .solvers import cg, gauss_seidel, pcg


def _parse_s_list(text):
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad fractional-order list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty fractional-order list")
    return values


def _parse_quad(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"expected <gauss>,<singular> quadrature orders, got {text!r}"
        )
    try:
        g, sing = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad quadrature orders: {text!r}")
    return QuadratureSpec(gauss_order=g, singular_order=sing)


def _add_common(p, levels_default):
    p.add_argument("--s", type=_parse_s_list, default=(0.5,), metavar="LIST",
                   help="comma-separated fractional orders in (0,1)")
    p.add_argument("--levels", type=int, default=levels_default,
                   help="refinement levels / stage cap (<=0: until --max-dofs)")
    p.add_argument("--gamma-tilde", type=float, default=None,
                   help="coarse-correction parameter (default: family default)")
    p.add_argument("--theta", type=float, default=4.0,
                   help="grading marking parameter (> 1)")
    p.add_argument("--mu", type=float, default=2.0,
                   help="grading strength (>= 1)")
    p.add_argument("--solver", choices=("gs", "cg", "pcg"), default=None,
                   help="restrict table runs to one solver (default: all)")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="relative-residual stopping tolerance")
    p.add_argument("--quad", type=_parse_quad, default=QuadratureSpec(),
                   metavar="G,S", help="gauss,singular quadrature orders")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--out", default=None, metavar="PATH.csv",
                   help="write the CSV here instead of stdout")
    p.add_argument("--max-dofs", type=int, default=5000,
                   help="skip stages beyond this interior-DOF count")
    p.add_argument("--timings", action="store_true",
                   help="record wall-clock times (breaks byte determinism)")


def _bench_spec(kind, args):
    return ExperimentSpec(
        kind=kind,
        s_values=args.s,
        gamma_tilde=args.gamma_tilde,
        levels=args.levels,
        theta=args.theta,
        mu=args.mu,
        quad=args.quad,
        solvers=(args.solver,) if args.solver else ("gs", "cg", "pcg"),
        tol=args.tol,
        out=args.out,
        seed=args.seed,
        max_dofs=args.max_dofs,
        timings=args.timings,
    )


def _run_bench(kind, args):
    text = run(_bench_spec(kind, args))
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {args.out}")
    return 0


def _run_solve(args):
    if len(args.s) != 1:
        print("solve expects exactly one value in --s", file=sys.stderr)
        return 2
    s = args.s[0]
    levels = max(args.levels, 1)
    hier = build_uniform_hierarchy(init_square(), levels)
    mesh = hier.meshes[-1]
    if mesh.num_interior > args.max_dofs:
        print(
            f"refusing to assemble {mesh.num_interior} DOFs"
            f" (limit {args.max_dofs}; raise --max-dofs)",
            file=sys.stderr,
        )
        return 2
    K = assemble_fractional_stiffness(mesh, s, args.quad)
    b = assemble_load(mesh, 1.0)
    solver = args.solver or "pcg"
    if solver == "gs":
        x, rep = gauss_seidel(K, b, tol=args.tol)
        desc = "gs"
    elif solver == "cg":
        x, rep = cg(K, b, tol=args.tol)
        desc = "cg"
    else:
        if args.precond == "none":
            x, rep = cg(K, b, tol=args.tol)
            desc = "pcg[none]=cg"
        elif args.precond == "diag":
            x, rep = pcg(K, diag_scaling(K), b, tol=args.tol)
            desc = "pcg[diag]"
        else:
            gt = (DEFAULT_GAMMA_TILDE_UNIFORM
                  if args.gamma_tilde is None else args.gamma_tilde)
            x, rep = pcg(K, bpx_uniform(hier, s, gt), b, tol=args.tol)
            desc = f"pcg[bpx gamma_tilde={gt}]"
    print(f"levels={levels} dofs={mesh.num_interior} s={s} solver={desc}")
    print(f"iterations={rep.iterations} residual={rep.final_relative_residual:.3e} "
          f"converged={rep.converged}")
    print(f"solution: min={x.min():.6e} max={x.max():.6e}")
    if args.dump_matrix:
        save_matrix(K, args.dump_matrix)
        print(f"matrix -> {args.dump_matrix}")
    if args.dump_mesh:
        save_mesh(mesh, args.dump_mesh)
        print(f"mesh -> {args.dump_mesh}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracbpx",
        description="Fractional-Laplacian FEM benchmarks and solves.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    specs = (
        ("table-uniform", "iteration-count table on uniform refinements", 5),
        ("table-graded", "iteration-count table on graded bisection stages", 0),
        ("convergence", "energy-error convergence study on the unit disk", 5),
        ("verify", "numerical property checks (norm equivalence, ...)", 5),
    )
    for name, help_text, levels_default in specs:
        p = sub.add_parser(name, help=help_text)
        _add_common(p, levels_default)
        p.set_defaults(func=lambda a, kind=name: _run_bench(kind, a))

    p = sub.add_parser("solve", help="assemble and solve one problem on the square")
    _add_common(p, 3)
    p.add_argument("--precond", choices=("none", "diag", "bpx"), default="bpx",
                   help="preconditioner for pcg (default bpx)")
    p.add_argument("--dump-matrix", default=None, metavar="PATH",
                   help="write the stiffness matrix (text format)")
    p.add_argument("--dump-mesh", default=None, metavar="PATH",
                   help="write the mesh (text format)")
    p.set_defaults(func=_run_solve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
