"""Command line entry point: ``cuberamsey <subcommand> ...``.

Exit codes: 0 verified success, 2 honest failure, 3 invariant breach,
4 configuration error.  ``CUBERAMSEY_LOG`` sets the log level and
``CUBERAMSEY_THREADS`` the default thread count.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .coloring import ColoringError, Embedding, make_oracle, verify_red_cube, write_matrix
from .embed import BaselineRefused, baseline_embed, greedy_embed
from .errors import ConfigError, HonestFailure, InvariantBreach
from .pipeline import (EXIT_BREACH, EXIT_CONFIG, EXIT_HONEST, EXIT_OK, build_context, load_config,
                       run_pipeline)
from .preprocess import FamilyForest, build_forest, check_degree_bounds
from .ramsey_tools import (InstanceTooLarge, Pattern, brute_force_arrow, lower_bound_certificate,
                           power_sum_bounds, ramsey_number)
from .refine import PrunedAssignment, prune
from .separator import (ORACLES, SeparatorError, SimpleGraph, degeneracy, recursive_decompose,
                        rounds_for)
from .tiling import TilingRun, audit

log = logging.getLogger("cuberamsey")


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _context(args):
    cfg = load_config(args.config)
    return build_context(cfg, Path(args.config).parent, args.threads)


# subcommands ----------------------------------------------------------------

def cmd_gen(args) -> int:
    desc = {"kind": args.kind, "N": args.N}
    if args.kind in ("blue-random", "blue-multipartite"):
        desc.update(p=args.p, seed=args.seed)
    if args.kind == "blue-multipartite":
        desc["parts"] = args.parts
    if args.kind == "lower-bound":
        desc = {"kind": "lower-bound", "s": args.s, "m": args.m}
    o = make_oracle(desc)
    if args.matrix:
        write_matrix(o, args.matrix)
        desc = {"kind": "file-backed", "path": str(args.matrix), "N": o.N}
    _emit(desc, args.output)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    ctx = _context(args)
    forest = build_forest(ctx.oracle, ctx.params, ctx.finder)
    forest.save(args.output)
    out = {"family": forest.stats()}
    if args.check:
        bounds = check_degree_bounds(ctx.oracle, forest, ctx.params)
        out["degree_checks"] = [b.to_dict() for b in bounds]
    _emit(out)
    return EXIT_OK


def cmd_tile(args) -> int:
    ctx = _context(args)
    forest = FamilyForest.load(args.forest)
    run = TilingRun(ctx.oracle, forest, ctx.params, ctx.threads)
    sink = open(args.events, "w") if args.events else sys.stdout

    def on_event(ev):
        sink.write(json.dumps(ev, sort_keys=True) + "\n")
        sink.flush()

    try:
        run.run(on_event)
    finally:
        run.save(args.output)
        if args.events:
            sink.close()
    a = audit(run)
    if not a["ok"]:
        raise InvariantBreach("tiling audit failed", a)
    log.info("tiling complete: %d cubes", len(run.tiling.cubes))
    return EXIT_OK


def _load_run(args, ctx) -> TilingRun:
    forest = FamilyForest.load(args.forest)
    return TilingRun.from_dict(json.loads(Path(args.tiling).read_text()), ctx.oracle, forest,
                               ctx.params, ctx.threads)


def cmd_prune(args) -> int:
    ctx = _context(args)
    run = _load_run(args, ctx)
    pa = prune(ctx.oracle, run, ctx.params)
    pa.save(args.output)
    s = pa.summary()
    s.pop("ledger")
    _emit(s)
    return EXIT_OK


def cmd_embed(args) -> int:
    ctx = _context(args)
    if args.baseline:
        try:
            e = baseline_embed(ctx.oracle, ctx.params.n)
        except BaselineRefused as exc:
            _emit({"refused": str(exc), "d_max": exc.d_max})
            return EXIT_HONEST
    else:
        if not (args.forest and args.tiling and args.pruned):
            raise ConfigError("embed needs --forest, --tiling and --pruned (or --baseline)")
        run = _load_run(args, ctx)
        pa = PrunedAssignment.load(args.pruned)
        e = greedy_embed(ctx.oracle, pa, run, ctx.params)
    e.save(args.output)
    _emit(verify_red_cube(ctx.oracle, e).to_dict())
    return EXIT_OK


def cmd_verify(args) -> int:
    desc = json.loads(Path(args.oracle).read_text())
    if "oracle" in desc:  # a full pipeline config
        desc = desc["oracle"]
    try:
        o = make_oracle(desc, Path(args.oracle).parent)
    except ColoringError as e:
        raise ConfigError(str(e)) from None
    v = verify_red_cube(o, Embedding.load(args.embedding))
    _emit(v.to_dict())
    return EXIT_OK if v.valid else EXIT_BREACH


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    art: dict = {}
    t0 = time.perf_counter()
    rep = run_pipeline(cfg, Path(args.config).parent, args.threads, art)
    log.info("pipeline %s in %.1fs, stage timings %s", rep.status, time.perf_counter() - t0,
             {k: round(v, 2) for k, v in rep.timings.items()})
    if args.report:
        rep.save(args.report)
    else:
        sys.stdout.write(rep.dumps())
    if args.timings:
        _emit({k: round(v, 3) for k, v in rep.timings.items()}, args.timings)
    if args.figures or args.csv:
        from . import plotting  # matplotlib only when asked for

        if args.figures:
            plotting.write_figures(rep.data, args.figures)
        if args.csv:
            plotting.write_csv(rep.data, args.csv)
    if rep.exit_code != EXIT_OK:
        err = rep.data.get("error", {})
        sys.stderr.write(f"{rep.status}: {err.get('message', '')}\n")
    return rep.exit_code


def cmd_ramsey_brute(args) -> int:
    pattern = Pattern.parse(args.pattern)
    if args.N is not None:
        r = brute_force_arrow(pattern, args.s, args.N, c4_scan=not args.general)
        _emit(r.to_dict())
        return EXIT_OK
    value = ramsey_number(pattern, args.s, start=args.start)
    _emit({"pattern": pattern.name, "s": args.s, "ramsey_number": value})
    return EXIT_OK


def cmd_bounds(args) -> int:
    out = {"power_sums": [power_sum_bounds(s).to_dict() for s in range(1, args.s_max + 1)]}
    if args.certificates:
        out["lower_bound_certificates"] = [
            lower_bound_certificate(s, n).to_dict()
            for s in range(3, args.cert_s_max + 1) for n in range(1, args.cert_n_max + 1)]
    _emit(out, args.output)
    ok = all(r["agree"] is not False and r["within_bound"] for r in out["power_sums"])
    ok = ok and all(c["valid"] for c in out.get("lower_bound_certificates", []))
    return EXIT_OK if ok else EXIT_BREACH


def cmd_separator(args) -> int:
    if args.grid:
        G = SimpleGraph.grid(args.grid)
    elif args.graph:
        G = SimpleGraph.load(args.graph)
    else:
        raise ConfigError("separator needs a graph file or --grid k")
    depth = args.depth if args.depth is not None else rounds_for(args.eta)
    d, _ = degeneracy(G)
    dec = recursive_decompose(G, args.oracle, depth)
    out = {"n": G.n, "m": G.m, "degeneracy": d, "eta": args.eta,
           "parts_within_eta": all(len(p) <= args.eta * G.n for p in dec.parts),
           "decomposition": dec.to_dict()}
    _emit(out, args.output)
    return EXIT_OK if dec.checks["ok"] else EXIT_BREACH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cuberamsey", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def staged(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="pipeline config (JSON)")
        sp.add_argument("--threads", type=int, default=None)
        sp.set_defaults(fn=fn)
        return sp

    g = sub.add_parser("gen", help="write an oracle descriptor (or an explicit matrix file)")
    g.add_argument("kind", choices=["all-red", "blue-matching", "blue-random",
                                    "blue-multipartite", "lower-bound"])
    g.add_argument("--N", type=int, default=0)
    g.add_argument("--p", type=float, default=0.1)
    g.add_argument("--parts", type=int, default=2)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--s", type=int, default=3)
    g.add_argument("--m", type=int, default=1)
    g.add_argument("--matrix", help="also write the coloring as an RQCB matrix file")
    g.add_argument("-o", "--output")
    g.set_defaults(fn=cmd_gen)

    sp = staged("preprocess", cmd_preprocess, "build the leveled family forest")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--check", action="store_true", help="measure the degree bounds")

    sp = staged("tile", cmd_tile, "build the multi-tiling; events stream as JSON lines")
    sp.add_argument("--forest", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--events", help="write events here instead of stdout")

    sp = staged("prune", cmd_prune, "blue-degree pruning of the finest sets")
    sp.add_argument("--forest", required=True)
    sp.add_argument("--tiling", required=True)
    sp.add_argument("-o", "--output", required=True)

    sp = staged("embed", cmd_embed, "greedy embedding of Q_n")
    sp.add_argument("--forest")
    sp.add_argument("--tiling")
    sp.add_argument("--pruned")
    sp.add_argument("--baseline", action="store_true",
                    help="vertex-by-vertex embedder, needs N >= d_max*n + 2^n")
    sp.add_argument("-o", "--output", required=True)

    v = sub.add_parser("verify", help="check that an embedding is a red Q_n")
    v.add_argument("oracle", help="oracle descriptor or pipeline config")
    v.add_argument("embedding")
    v.set_defaults(fn=cmd_verify)

    sp = staged("pipeline", cmd_pipeline, "run every stage and write a report")
    sp.add_argument("--report", help="JSON report path (default stdout)")
    sp.add_argument("--figures", help="directory for PNG figures")
    sp.add_argument("--csv", help="per-cube CSV table")
    sp.add_argument("--timings", help="stage wall-clock times (kept out of the report)")

    r = sub.add_parser("ramsey-brute", help="exhaustive small Ramsey search")
    r.add_argument("--pattern", default="Q2", help="Qn or 'k:a-b,c-d,...'")
    r.add_argument("--s", type=int, default=3)
    r.add_argument("--N", type=int, help="decide a single N instead of searching")
    r.add_argument("--start", type=int, default=1)
    r.add_argument("--general", action="store_true", help="generic pattern test instead of C4 scan")
    r.set_defaults(fn=cmd_ramsey_brute)

    b = sub.add_parser("bounds", help="power-sum bounds and lower-bound certificates")
    b.add_argument("--s-max", type=int, default=20)
    b.add_argument("--certificates", action="store_true")
    b.add_argument("--cert-s-max", type=int, default=6)
    b.add_argument("--cert-n-max", type=int, default=10)
    b.add_argument("-o", "--output")
    b.set_defaults(fn=cmd_bounds)

    s = sub.add_parser("separator", help="recursive separator decomposition")
    s.add_argument("graph", nargs="?", help="graph file: 'n m' header, one edge per line")
    s.add_argument("--grid", type=int, help="use the k x k grid instead of a file")
    s.add_argument("--oracle", choices=sorted(ORACLES), default="bfs")
    s.add_argument("--eta", type=float, default=0.1)
    s.add_argument("--depth", type=int)
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_separator)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("CUBERAMSEY_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except HonestFailure as e:
        sys.stderr.write(f"honest failure: {e}\n")
        return EXIT_HONEST
    except InvariantBreach as e:
        sys.stderr.write(f"invariant breach: {e}\n")
        return EXIT_BREACH
    except (ConfigError, ColoringError, SeparatorError, InstanceTooLarge, OSError,
            json.JSONDecodeError, KeyError, ValueError) as e:
        sys.stderr.write(f"config error: {e}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
