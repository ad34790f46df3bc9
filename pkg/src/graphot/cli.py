"""Command-line interface.

Exit status is 0 on success, 2 on invalid input and 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import experiment as ex
from .errors import NumericalError, ValidationError
from .generators import PhantomSpec, lattice_graph, make_phantom, path_graph, random_graph

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="experiment JSON file")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--p", dest="norm_p", help="norm index: 1, 2 or inf")
    p.add_argument("--lambda", dest="lambda_reg", type=float, help="Tikhonov parameter")
    p.add_argument("--terms", type=int, metavar="N")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--corners", action="store_true", help="add corner boundary sites to generated lattices")
    p.add_argument("--green", action="store_true", help="also write the background Green's function")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphot", description="Born series on graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="simulate scattering data")
    _common(p)
    p = sub.add_parser("reconstruct", help="run the inverse series")
    _common(p)
    p.add_argument("--data", help="reconstruct from an existing data CSV")
    p = sub.add_parser("diagnose", help="series constants, radii and invertibility")
    _common(p)
    p = sub.add_parser("multifreq", help="structured multi-frequency recovery")
    _common(p)
    p.add_argument("--alphas", type=lambda s: [float(x) for x in s.split(",")],
                   help="comma-separated absorptions")
    p.add_argument("--data", help="reconstruct from an existing data CSV")

    gen = sub.add_parser("gen", help="generate graphs and phantoms")
    gsub = gen.add_subparsers(dest="what", required=True)
    g = gsub.add_parser("lattice", help="rectangular lattice with boundary sites")
    g.add_argument("rows", type=int)
    g.add_argument("cols", type=int)
    g.add_argument("--corners", action="store_true")
    g.add_argument("-o", "--output", required=True)
    g = gsub.add_parser("path", help="path with boundary vertex 0")
    g.add_argument("n", type=int)
    g.add_argument("--far-boundary", action="store_true")
    g.add_argument("-o", "--output", required=True)
    g = gsub.add_parser("random", help="seeded random connected graph")
    g.add_argument("n", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    g = gsub.add_parser("phantom", help="write an explicit vertex -> value map")
    g.add_argument("graph", help="graph JSON file")
    g.add_argument("--count", type=int, default=2)
    g.add_argument("--amplitude", type=float, default=0.1)
    g.add_argument("--size", type=int, nargs=2, default=(3, 3))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True)
    return parser


def _config(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.load(args.config)
    graph = dict(cfg.graph)
    if args.corners and graph.get("generator") == "lattice":
        graph["corners"] = True
    extra = {}
    if getattr(args, "alphas", None):
        extra["alphas"] = args.alphas
    cfg = cfg.override(
        graph=graph, alpha0=args.alpha0, t=args.t, p=args.norm_p, lambda_reg=args.lambda_reg,
        terms=args.terms, seed=args.seed, out=args.out, export_green=args.green or None, **extra,
    )
    # re-run validation on the overridden values
    return ex.ExperimentConfig.from_dict(
        {k: v for k, v in vars(cfg).items() if k != "base_dir"}, base_dir=cfg.base_dir
    )


def _gen(args) -> dict:
    if args.what == "phantom":
        g = ex.load_graph(args.graph)
        spec = PhantomSpec(count=args.count, amplitude=args.amplitude, size=tuple(args.size), seed=args.seed)
        eta = make_phantom(spec, g)
        values = {v: float(x) for v, x in zip(g.interior, eta) if x != 0}
        with open(args.output, "w") as fh:
            json.dump({"kind": "explicit", "values": values}, fh, indent=1)
        return {"nonzero": len(values), "files": {"phantom": args.output}}
    if args.what == "lattice":
        g = lattice_graph(args.rows, args.cols, corners=args.corners)
    elif args.what == "path":
        g = path_graph(args.n, far_boundary=args.far_boundary)
    else:
        g = random_graph(args.n, args.seed)
    ex.save_graph(g, args.output)
    return {"n_interior": g.n_interior, "n_boundary": g.n_boundary, "files": {"graph": args.output}}


def run(args) -> dict:
    if args.command == "gen":
        return _gen(args)
    cfg = _config(args)
    if args.command == "forward":
        return ex.run_forward(cfg)
    if args.command == "diagnose":
        return ex.run_diagnose(cfg)
    if args.command == "multifreq":
        if cfg.alphas is None:
            raise ValidationError("multifreq needs 'alphas' in the config or --alphas")
        return ex.run_multifreq(cfg, data_file=args.data)
    return ex.run_experiment(cfg, data_file=args.data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            report = run(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    json.dump(ex._jsonable(report), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
