"""Command-line front end: ``run``, ``gen``, ``floyd`` and ``classical``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import io, oracle, qfloyd
from .datasets import GENERATORS, generate_dataset
from .errors import QIsomapError
from .pipeline import RunConfig, build_adjacency, emit_artifacts, run_pipeline


def _cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    report = run_pipeline(cfg)
    paths = emit_artifacts(report, args.out)
    for p in paths:
        print(p)
    if not report.ok:
        failed = [k for k, v in report.diagnostics["stages"].items() if not v.get("ok")]
        print(f"stage checks failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def _cmd_gen(args) -> int:
    pts = generate_dataset(args.name, args.n, args.noise, args.seed)
    io.write_points(args.out, pts)
    return 0


def _cmd_floyd(args) -> int:
    W = io.read_matrix(args.adj)
    adj = qfloyd.AdjacencyInput.from_matrix(W, fraction_bits=args.fraction_bits)
    geo = qfloyd.run_quantum_floyd(adj, amplitude=False)
    io.write_matrix(args.out, geo.distances())
    return 0


def _cmd_classical(args) -> int:
    pts = io.read_points(args.pts)
    cfg = RunConfig(dataset={"path": args.pts}, knn_k=args.k, target_dim=args.d,
                    fraction_bits=args.fraction_bits)
    adj = build_adjacency(pts, cfg)
    D = qfloyd.classical_floyd(adj)
    if np.any(np.isinf(D)):
        print("neighbourhood graph is disconnected", file=sys.stderr)
        return 2
    _, emb = oracle.classical_isomap_from_geodesics(D, args.d)
    if args.out:
        io.write_matrix(args.out, emb.Z)
    else:
        for row in emb.Z:
            print(",".join("%.17g" % v for v in row))
    print(json.dumps({"eta": emb.eta, "eigenvalues": emb.eigenvalues.tolist()}), file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qisomap", description="Simulated quantum Isomap with a classical oracle.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="full pipeline from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default="out")
    r.set_defaults(func=_cmd_run)

    g = sub.add_parser("gen", help="write a generated point set")
    g.add_argument("--name", required=True, choices=sorted(GENERATORS))
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    f = sub.add_parser("floyd", help="simulated quantum Floyd on an adjacency CSV")
    f.add_argument("--adj", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--fraction-bits", type=int, default=12)
    f.set_defaults(func=_cmd_floyd)

    c = sub.add_parser("classical", help="classical Isomap on a point CSV")
    c.add_argument("--pts", required=True)
    c.add_argument("--d", type=int, default=2)
    c.add_argument("--k", type=int, default=5)
    c.add_argument("--fraction-bits", type=int, default=12)
    c.add_argument("--out")
    c.set_defaults(func=_cmd_classical)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (QIsomapError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
