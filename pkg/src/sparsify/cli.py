"""Command line interface.

    sparsify eliminate instance.tsp [--steps 1,2,3] [--depth 10] ...
    sparsify verify instance.tsp --edges edges.txt [--max-n 12]
    sparsify stats instance.tsp --edges edges.txt

Exit codes: 0 ok, 2 parse/usage error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backtrack import SearchConfig
from .geometry import DuplicatePoint
from .oracle import MAX_ENUM_N, enumerate_optimum_tours
from .pipeline import PipelineConfig, run
from .tsplib import ParseError, parse_edge_set, parse_instance, write_edge_set

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VERIFY = 3


def _read_instance(path: str):
    return parse_instance(Path(path).read_text(encoding="utf-8"))


def _cmd_eliminate(args) -> int:
    instance = _read_instance(args.instance)
    steps = tuple(int(s) for s in args.steps.split(","))
    cfg = PipelineConfig(
        steps=steps,
        max_candidates=args.candidates,
        search=SearchConfig(
            max_depth=args.depth,
            node_budget=args.budget,
            branch_cap=args.branch_cap,
        ),
        threads=args.threads,
        margin=args.margin,
    )
    edges, stats = run(instance, cfg)
    out_path = Path(args.out)
    out_path.write_text(write_edge_set(instance, edges), encoding="utf-8")
    if args.stats:
        Path(args.stats).write_text(stats.to_json(), encoding="utf-8")
    print(
        f"{instance.name or args.instance}: {stats.m_input} -> "
        f"{stats.step1_edges} -> {stats.step2_edges} -> {stats.step3_edges} "
        f"(ratio {stats.ratio:.2f}), written to {out_path}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    instance = _read_instance(args.instance)
    edges = parse_edge_set(Path(args.edges).read_text(encoding="utf-8"))
    if edges.n != instance.n:
        print(f"edge set is over {edges.n} vertices, instance has {instance.n}",
              file=sys.stderr)
        return EXIT_PARSE
    if instance.n > args.max_n:
        print(
            f"instance has {instance.n} > {args.max_n} vertices; "
            "exact verification is desk-scale only",
            file=sys.stderr,
        )
        return EXIT_PARSE
    bad = set()
    for tour in enumerate_optimum_tours(instance):
        for e in tour.edge_set():
            u, v = tuple(e)
            if not edges.has_edge(u, v):
                bad.add((min(u, v), max(u, v)))
    if bad:
        for u, v in sorted(bad):
            print(f"optimum tour edge ({u + 1}, {v + 1}) missing from edge set")
        return EXIT_VERIFY
    print(f"ok: all optimum tours are contained in the {edges.m}-edge set")
    return EXIT_OK


def _cmd_stats(args) -> int:
    instance = _read_instance(args.instance)
    edges = parse_edge_set(Path(args.edges).read_text(encoding="utf-8"))
    if edges.n != instance.n:
        print(f"edge set is over {edges.n} vertices, instance has {instance.n}",
              file=sys.stderr)
        return EXIT_PARSE
    print(
        json.dumps(
            {
                "name": instance.name,
                "n": instance.n,
                "m": edges.m,
                "m_complete": instance.n * (instance.n - 1) // 2,
                "ratio": round(edges.m / instance.n, 3),
            },
            indent=2,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sparsify",
        description="Provably safe edge elimination for rounded-Euclidean "
        "TSP instances (EUC_2D / CEIL_2D).",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    el = sub.add_parser("eliminate", help="run the elimination pipeline")
    el.add_argument("instance", help="TSPLIB instance file")
    el.add_argument("--steps", default="1,2,3", help="comma list from {1,2,3}")
    el.add_argument("--depth", type=int, default=10, help="backtrack extension depth")
    el.add_argument("--candidates", type=int, default=10,
                    help="potential points examined per edge")
    el.add_argument("--threads", type=int, default=1)
    el.add_argument("--margin", type=float, default=1e-6)
    el.add_argument("--budget", type=int, default=3000,
                    help="backtrack node budget per edge (deterministic)")
    el.add_argument("--branch-cap", type=int, default=24)
    el.add_argument("--out", default="edges.txt")
    el.add_argument("--stats", default=None, help="write run stats JSON here")
    el.set_defaults(fn=_cmd_eliminate)

    ve = sub.add_parser("verify", help="oracle check: all optimum tours survive")
    ve.add_argument("instance")
    ve.add_argument("--edges", required=True)
    ve.add_argument("--max-n", type=int, default=MAX_ENUM_N)
    ve.set_defaults(fn=_cmd_verify)

    st = sub.add_parser("stats", help="print edge set statistics")
    st.add_argument("instance")
    st.add_argument("--edges", required=True)
    st.set_defaults(fn=_cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, DuplicatePoint, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
