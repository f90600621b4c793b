"""Command line entry point: ``emptysimplex <subcommand> ...``.

All subcommands write CSV, to ``--out`` when given and stdout otherwise.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import experiments as ex
from .bodies import sample_uniform
from .covariogram import perimeter_profile
from .degree import degree_lower_bound_local, degree_of_set_exact
from .functionals import f_t_k_value
from .geometry import PointSet


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON file with ExperimentConfig keys")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--mode", choices=["exact", "local"], help="degree mode")


def _config(args) -> ex.ExperimentConfig:
    cfg = ex.ExperimentConfig.load(args.config) if args.config else ex.ExperimentConfig()
    changes = {}
    for flag, key in (("seed", "seed"), ("threads", "threads"), ("out", "out"), ("mode", "degree_mode")):
        v = getattr(args, flag, None)
        if v is not None:
            changes[key] = v
    if getattr(args, "body", None) is not None:
        changes["body"] = _body_arg(args.body)
    if getattr(args, "dim", None) is not None:
        changes["dim"] = args.dim
    if changes:
        cfg = cfg.replace(**changes)
    if cfg.seed < 0 or cfg.seed >= 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return cfg


def _body_arg(text: str):
    text = text.strip()
    return json.loads(text) if text.startswith("{") else text


def _emit(header, rows, out) -> None:
    fh = open(out, "w", newline="") if out else io.StringIO()
    w = csv.writer(fh)
    w.writerow(header)
    for r in rows:
        w.writerow([ex._fmt(v) for v in r])
    if out:
        fh.close()
    else:
        sys.stdout.write(fh.getvalue())


def _read_points(path) -> PointSet:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PointSet(data)


def _points(args, cfg) -> PointSet:
    if args.input:
        return _read_points(args.input)
    if args.n is None:
        raise ValueError("give --input or -n")
    return sample_uniform(cfg.convex_body, args.n, cfg.seed)


def cmd_sample(args) -> None:
    cfg = _config(args)
    X = sample_uniform(cfg.convex_body, args.n, cfg.seed)
    _emit([f"x{j}" for j in range(X.dim)], X.points.tolist(), cfg.out)


def cmd_degree(args) -> None:
    cfg = _config(args)
    X = _points(args, cfg)
    if cfg.degree_mode == "exact":
        rep = degree_of_set_exact(X)
    else:
        rep = degree_lower_bound_local(X, args.T if args.T else cfg.T(len(X)))
    argmax = " ".join(str(i) for i in rep.argmax.indices) if rep.argmax is not None else ""
    _emit(["n", "M", "mode", "degree", "argmax"], [[len(X), X.dim, rep.mode, rep.degree, argmax]], cfg.out)


def cmd_functionals(args) -> None:
    cfg = _config(args)
    X = _points(args, cfg)
    T = args.T if args.T else cfg.T(len(X))
    ks = args.k if args.k else cfg.k_list
    rows = []
    for k in ks:
        fv = f_t_k_value(X, T, k)
        rows.append([len(X), X.dim, T, k, fv.subsets, fv.value])
    _emit(["n", "M", "T", "k", "N_T", "F_T_k"], rows, cfg.out)


def cmd_covariogram(args) -> None:
    cfg = _config(args)
    body = cfg.convex_body
    m = body.dim
    if args.direction:
        dirs = np.array(args.direction, dtype=np.float64).reshape(-1, m)
    else:
        dirs = args.directions
    est = perimeter_profile(body, dirs, samples=args.samples, seed=cfg.seed)
    rows = []
    for p in est.profiles:
        for r, g in zip(p.r, p.g):
            rows.append(list(p.direction) + [r, g, p.derivative, est.perimeter])
    _emit([f"u{j}" for j in range(m)] + ["r", "g", "derivative", "perimeter"], rows, cfg.out)


def cmd_experiment(args) -> None:
    cfg = _config(args)
    rows = ex.run_experiment(args.name, cfg)
    if not cfg.out:
        buf = io.StringIO()
        ex.write_csv(rows, buf)
        sys.stdout.write(buf.getvalue())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emptysimplex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="uniform points in a convex body")
    _common(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--body")
    p.add_argument("--dim", type=int)
    p.set_defaults(func=cmd_sample)

    for name, func, hlp in (
        ("degree", cmd_degree, "set degree of a point set"),
        ("functionals", cmd_functionals, "N_T and F_T^(k) of a point set"),
    ):
        p = sub.add_parser(name, help=hlp)
        _common(p)
        p.add_argument("--input", help="CSV of points with a header row")
        p.add_argument("-n", type=int, help="sample n points instead of reading --input")
        p.add_argument("--body")
        p.add_argument("--dim", type=int)
        p.add_argument("-T", type=float, help="cluster radius (default n^(-1/(M-1)))")
        if name == "functionals":
            p.add_argument("-k", type=int, action="append", help="moment order, repeatable")
        p.set_defaults(func=func)

    p = sub.add_parser("covariogram", help="directional derivatives and perimeter")
    _common(p)
    p.add_argument("--body")
    p.add_argument("--dim", type=int)
    p.add_argument("--direction", type=float, nargs="+", help="explicit unit direction(s), flattened")
    p.add_argument("--directions", type=int, help="number of quadrature directions")
    p.add_argument("--samples", type=int, default=200_000, help="MC samples for bodies without closed form")
    p.set_defaults(func=cmd_covariogram)

    p = sub.add_parser("experiment", help="run a named experiment")
    _common(p)
    p.add_argument("name", choices=sorted(ex.EXPERIMENTS))
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
