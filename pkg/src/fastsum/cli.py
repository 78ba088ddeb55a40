"""Command-line interface.

Subcommands:
  eval         evaluate a field over a query set and write CSV (plus
               PFM/PGM/JSON for slice planes)
  sweep        parameter sweep (beta or samples-per-subdomain) to CSV/JSON
  ablate-rr    compare Russian roulette modes on one scene
  validate     build a tree and run the structural + identity checks
  sample-mesh  sample an OBJ surface into a points file

Exit codes: 0 success, 1 usage error, 2 data error. The env var
FASTSUM_THREADS caps evaluation workers (0 = auto).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .bench import (rr_ablation, run_sweep, write_sweep_csv, write_sweep_json)
from .estimators import evaluate_field, telescoping_exhaustive, brute_force
from .octree import build_tree, dump_outline, validate_tree
from .scene_io import (GridSpec, PointsFileError, load_obj, make_queries,
                       parse_points_file, sample_mesh_surface,
                       write_outputs, write_points_file)
from .types import EstimatorConfig, KernelSpec, QuerySet, SourceSet, \
    normalize_to_unit_cube

_METHOD_ALIASES = {
    "brute": "brute_force", "brute_force": "brute_force",
    "bh": "barnes_hut", "barnes-hut": "barnes_hut", "barnes_hut": "barnes_hut",
    "stochastic": "stochastic",
    "telescoping": "telescoping_exhaustive",
    "telescoping_exhaustive": "telescoping_exhaustive",
}
_KERNEL_ALIASES = {
    "coulomb": "coulomb",
    "winding": "winding_dipole", "winding_dipole": "winding_dipole",
    "smooth": "smooth_exp", "smooth_exp": "smooth_exp",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for
    # data errors and uses 1 for usage
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


class DataError(Exception):
    pass


def _vec3(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    return tuple(parts)


def _parse_param_list(text: str, integer: bool) -> list[float]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    vals = [float(v) for v in text.split(",")]
    return [float(int(v)) for v in vals] if integer else vals


def _add_source_args(p: argparse.ArgumentParser):
    p.add_argument("--points", help="points file (x y z m[ my mz])")
    p.add_argument("--mesh", help="OBJ mesh to sample sources from")
    p.add_argument("--samples", type=int, default=4096,
                   help="surface sample count when using --mesh")
    p.add_argument("--mass", type=float, default=None,
                   help="override per-point mass for scalar-kernel mesh sampling")
    p.add_argument("--source-seed", type=int, default=0,
                   help="seed for mesh surface sampling")
    p.add_argument("--normalize", action="store_true",
                   help="rescale sources isotropically into [-1,1]^3")


def _add_method_args(p: argparse.ArgumentParser):
    p.add_argument("--method", default="stochastic",
                   choices=sorted(_METHOD_ALIASES))
    p.add_argument("--kernel", default="coulomb",
                   choices=sorted(_KERNEL_ALIASES))
    p.add_argument("--alpha", type=float, default=200.0)
    p.add_argument("--beta", type=float, default=2.0)
    p.add_argument("--samples-per-subdomain", "-S", type=int, default=1)
    p.add_argument("--rr-mode", default="paper_ratio",
                   choices=["paper_ratio", "fixed_half", "disabled"])
    p.add_argument("--branching", type=int, default=None,
                   help="per-dimension branching factor (default: 2 for "
                        "barnes-hut, 4 for stochastic)")
    p.add_argument("--max-depth", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", default="f64", choices=["f32", "f64"])


def _add_query_args(p: argparse.ArgumentParser):
    p.add_argument("--grid", type=int, help="3D lattice resolution R (R^3 points)")
    p.add_argument("--slice", help="slice plane resolution NU,NV")
    p.add_argument("--slice-origin", type=_vec3, default=(0.0, 0.0, 0.0))
    p.add_argument("--slice-u", type=_vec3, default=(1.0, 0.0, 0.0))
    p.add_argument("--slice-v", type=_vec3, default=(0.0, 1.0, 0.0))
    p.add_argument("--slice-extent", type=float, default=1.0)
    p.add_argument("--random-queries", type=int,
                   help="N random query points in the bounds")
    p.add_argument("--query-seed", type=int, default=0)


def _load_sources(args, kernel_kind: str) -> SourceSet:
    if args.points and args.mesh:
        raise DataError("pass either --points or --mesh, not both")
    if args.points:
        sources = parse_points_file(args.points)
    elif args.mesh:
        verts, faces = load_obj(args.mesh)
        sources = sample_mesh_surface(verts, faces, args.samples,
                                      args.source_seed, kernel_kind,
                                      point_mass=args.mass)
    else:
        raise DataError("a source of points is required (--points or --mesh)")
    if args.normalize:
        _, _, pos = normalize_to_unit_cube(sources.positions)
        sources = SourceSet(pos, sources.masses, sources.weights)
    return sources


def _grid_spec(args) -> GridSpec:
    chosen = sum(x is not None for x in (args.grid, args.slice,
                                         args.random_queries))
    if chosen != 1:
        raise DataError("pick exactly one of --grid, --slice, --random-queries")
    if args.grid is not None:
        return GridSpec("grid3d", resolution=(args.grid,) * 3)
    if args.slice is not None:
        nu, nv = (int(x) for x in args.slice.split(","))
        return GridSpec("slice_plane", resolution=(nu, nv),
                        origin=args.slice_origin, u_axis=args.slice_u,
                        v_axis=args.slice_v, extent=args.slice_extent)
    return GridSpec("random", count=args.random_queries, seed=args.query_seed)


def _config(args) -> EstimatorConfig:
    return EstimatorConfig(
        method=_METHOD_ALIASES[args.method], beta=args.beta,
        samples_per_subdomain=args.samples_per_subdomain,
        rr_mode=args.rr_mode, seed=args.seed,
        branching_per_dim=args.branching, max_depth=args.max_depth,
        precision=args.precision)


def _kernel(args) -> KernelSpec:
    return KernelSpec(kind=_KERNEL_ALIASES[args.kernel], alpha=args.alpha)


def _cmd_eval(args) -> int:
    kernel = _kernel(args)
    sources = _load_sources(args, kernel.kind)
    spec = _grid_spec(args)
    queries = make_queries(spec)
    config = _config(args)
    tree = None
    if config.method != "brute_force":
        tree = build_tree(sources, config.resolved_branching, config.max_depth)
        if args.dump_tree:
            print(dump_outline(tree))
    result = evaluate_field(config, sources, kernel, queries, tree=tree)
    paths = write_outputs(result, queries, spec, args.out_prefix)
    print(f"evaluated {len(queries)} queries with {config.method} "
          f"({result.flagged_count} flagged); wrote "
          + ", ".join(sorted(paths.values())))
    return 0


def _cmd_sweep(args) -> int:
    kernel = _kernel(args)
    sources = _load_sources(args, kernel.kind)
    queries = make_queries(_grid_spec(args))
    method = _METHOD_ALIASES[args.method]
    if method not in ("barnes_hut", "stochastic"):
        raise DataError("sweep supports barnes-hut and stochastic methods")
    params = _parse_param_list(args.params, integer=(method == "stochastic"))
    records = run_sweep(sources, kernel, method, params, queries,
                        seed=args.seed, branching_per_dim=args.branching,
                        rr_mode=args.rr_mode)
    csv_path = f"{args.out_prefix}_sweep.csv"
    json_path = f"{args.out_prefix}_sweep.json"
    write_sweep_csv(records, csv_path)
    write_sweep_json(json_path, {"method": method, "kernel": kernel.kind,
                                 "seed": args.seed, "params": params},
                     sources, kernel, queries, records)
    print(f"wrote {csv_path} and {json_path} ({len(records)} rows)")
    return 0


def _cmd_ablate_rr(args) -> int:
    kernel = _kernel(args)
    sources = _load_sources(args, kernel.kind)
    queries = make_queries(_grid_spec(args))
    result = rr_ablation(sources, kernel, queries,
                         samples_per_subdomain=args.samples_per_subdomain,
                         seed=args.seed, branching_per_dim=args.branching)
    records = [r for r in result.values()]
    csv_path = f"{args.out_prefix}_ablation.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("rr_mode,mean_abs,median_abs,max_abs,rmse,"
                 "visited_nodes_mean,mean_path_length\n")
        for mode, r in result.items():
            fh.write(f"{mode},{r.stats.mean_abs:.17g},{r.stats.median_abs:.17g},"
                     f"{r.stats.max_abs:.17g},{r.rmse:.17g},"
                     f"{r.visited_nodes_mean:.17g},{r.mean_path_length:.17g}\n")
    for mode, r in result.items():
        print(f"{mode}: mean_abs={r.stats.mean_abs:.3e} "
              f"visited_nodes_mean={r.visited_nodes_mean:.1f} "
              f"mean_path_length={r.mean_path_length:.2f}")
    print(f"wrote {csv_path}")
    return 0


def _cmd_validate(args) -> int:
    kernel = _kernel(args)
    sources = _load_sources(args, kernel.kind)
    config = _config(args)
    tree = build_tree(sources, config.resolved_branching, config.max_depth)
    report = validate_tree(tree, sources)
    for line in report:
        print(f"INVALID: {line}")
    rng = np.random.default_rng(args.seed)
    qs = rng.uniform(-1.5, 1.5, size=(8, 3))
    worst = 0.0
    for q in qs:
        bf = brute_force(sources, kernel, q)
        tel = telescoping_exhaustive(tree, sources, kernel, q)
        worst = max(worst, abs(tel - bf) / (1.0 + abs(bf)))
    identity_ok = worst <= 1e-9
    if not identity_ok:
        print(f"INVALID: telescoping identity violated (rel err {worst:.3e})")
    if report or not identity_ok:
        return 2
    print(f"valid: {tree.num_nodes} nodes over {len(sources)} points; "
          f"telescoping identity within {worst:.3e}")
    return 0


def _cmd_sample_mesh(args) -> int:
    kernel = _kernel(args)
    verts, faces = load_obj(args.mesh)
    sources = sample_mesh_surface(verts, faces, args.samples, args.source_seed,
                                  kernel.kind, point_mass=args.mass)
    write_points_file(args.out, sources)
    print(f"wrote {args.out} ({len(sources)} samples, "
          f"{sources.channel_count} channel(s))")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fastsum",
                     description="Fast kernel summation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a field")
    _add_source_args(p_eval)
    _add_method_args(p_eval)
    _add_query_args(p_eval)
    p_eval.add_argument("--out-prefix", default="field")
    p_eval.add_argument("--dump-tree", action="store_true",
                        help="print a text outline of the tree")
    p_eval.set_defaults(func=_cmd_eval)

    p_sweep = sub.add_parser("sweep", help="parameter sweep")
    _add_source_args(p_sweep)
    _add_method_args(p_sweep)
    _add_query_args(p_sweep)
    p_sweep.add_argument("--params", required=True,
                         help="comma list or inclusive range lo..hi")
    p_sweep.add_argument("--out-prefix", default="sweep")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_abl = sub.add_parser("ablate-rr", help="Russian roulette ablation")
    _add_source_args(p_abl)
    _add_method_args(p_abl)
    _add_query_args(p_abl)
    p_abl.add_argument("--out-prefix", default="ablation")
    p_abl.set_defaults(func=_cmd_ablate_rr)

    p_val = sub.add_parser("validate", help="tree + estimator invariants")
    _add_source_args(p_val)
    _add_method_args(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_sm = sub.add_parser("sample-mesh", help="sample an OBJ into a points file")
    p_sm.add_argument("--mesh", required=True)
    p_sm.add_argument("--samples", type=int, required=True)
    p_sm.add_argument("--mass", type=float, default=None)
    p_sm.add_argument("--source-seed", type=int, default=0)
    p_sm.add_argument("--kernel", default="coulomb",
                      choices=sorted(_KERNEL_ALIASES))
    p_sm.add_argument("--alpha", type=float, default=200.0)
    p_sm.add_argument("--out", required=True)
    p_sm.set_defaults(func=_cmd_sample_mesh)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (DataError, PointsFileError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
