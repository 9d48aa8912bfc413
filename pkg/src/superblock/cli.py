"""Command line entry point: ``superblock {index build,search,eval,bench,synth}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .bench import evaluate_rankings, grid_sweep, run_benchmark
from .corpus import DEFAULT_QUERY_SCALE, load_corpus, load_qrels, load_queries
from .index import DEFAULT_BLOCK_SIZE, DEFAULT_SUPERBLOCK_SIZE, build_index, index_space_report, order_documents
from .oracle import ExhaustiveScorer
from .search import SearchParams, search
from .storage import load_index, save_index
from .synth import SyntheticCorpusSpec, generate_synthetic


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, default=str)
    sys.stdout.write("\n")


def _params(args) -> SearchParams:
    return SearchParams(
        k=args.k, mu=args.mu, eta=args.eta, beta=args.beta,
        loop_order=args.loop_order, mode=args.mode,
    )


def _csv(text: str) -> list[str]:
    return [x for x in text.split(",") if x]


def cmd_index_build(args) -> int:
    corpus = load_corpus(args.docs)
    ordering = order_documents(corpus, args.order)
    index = build_index(corpus, ordering, b=args.b, c=args.c)
    save_index(index, args.out)
    _emit({"out": args.out, "geometry": asdict(index.geometry), "space": index_space_report(index)})
    return 0


def cmd_search(args) -> int:
    index = load_index(args.index)
    queries = load_queries(args.queries, index.term_ids, args.query_scale)
    params = _params(args)
    engine = ExhaustiveScorer(index) if args.oracle else None
    tag = args.tag or ("oracle" if args.oracle else "sp")
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for qid, q in queries:
            hits, _ = engine.search(q, params) if engine else search(index, q, params)
            for rank, (doc_id, score) in enumerate(hits, start=1):
                out.write(f"{qid}\tQ0\t{doc_id}\t{rank}\t{score}\t{tag}\n")
    finally:
        if args.out:
            out.close()
    return 0


def read_run(path: str | Path) -> dict[str, list[str]]:
    """Read a TREC run file into ranked doc-id lists."""
    rows: dict[str, list[tuple[int, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns in a TREC run line")
            rows.setdefault(parts[0], []).append((int(parts[3]), parts[2]))
    return {qid: [d for _, d in sorted(v)] for qid, v in rows.items()}


def cmd_eval(args) -> int:
    rankings = read_run(args.results)
    qrels = load_qrels(args.qrels)
    for qid in qrels:
        rankings.setdefault(qid, [])
    ev = evaluate_rankings(rankings, qrels, args.k)
    _emit({"k": args.k, "num_queries": len(rankings), **ev["means"], "queries_without_relevant": ev["flagged"]})
    return 0


def cmd_bench(args) -> int:
    index = load_index(args.index)
    queries = load_queries(args.queries, index.term_ids, args.query_scale)
    qrels = load_qrels(args.qrels) if args.qrels else None
    params = _params(args)
    engine = ExhaustiveScorer(index) if args.oracle else index
    if args.grid_mu or args.grid_eta:
        if qrels is None:
            raise SystemExit("--grid-mu/--grid-eta need --qrels")
        rows = grid_sweep(
            engine, queries, params, qrels,
            _csv(args.grid_mu) or [str(params.mu)], _csv(args.grid_eta) or [str(params.eta)],
            args.reps, args.budget,
        )
        _emit({"budget": args.budget, "grid": rows})
        return 0
    report = run_benchmark(engine, queries, params, args.reps, qrels, threads=args.threads)
    _emit(report.as_dict())
    return 0


def cmd_synth(args) -> int:
    spec = SyntheticCorpusSpec.from_json(args.spec)
    coll = generate_synthetic(spec)
    paths = coll.write(args.out)
    _emit({"spec": asdict(spec), "files": paths})
    return 0


def _add_search_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--mu", default="1")
    p.add_argument("--eta", default="1")
    p.add_argument("--beta", default="1")
    p.add_argument("--loop-order", choices=["saat", "taat"], default="saat")
    p.add_argument("--mode", choices=["interleaved", "two-phase"], default="interleaved")
    p.add_argument("--oracle", action="store_true", help="score exhaustively instead of pruning")
    p.add_argument("--query-scale", type=int, default=DEFAULT_QUERY_SCALE,
                   help="query weights are multiplied by this and rounded")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superblock", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    index = sub.add_parser("index", help="index operations")
    index_sub = index.add_subparsers(dest="index_command", required=True)
    build = index_sub.add_parser("build", help="build a binary index from a JSONL collection")
    build.add_argument("--docs", required=True)
    build.add_argument("--out", required=True)
    build.add_argument("--b", type=int, default=DEFAULT_BLOCK_SIZE)
    build.add_argument("--c", type=int, default=DEFAULT_SUPERBLOCK_SIZE)
    build.add_argument("--order", choices=["identity", "greedy"], default="identity")
    build.set_defaults(func=cmd_index_build)

    s = sub.add_parser("search", help="run queries and write a TREC run")
    _add_search_options(s)
    s.add_argument("--tag", default=None)
    s.add_argument("--out", default=None, help="run file (default: stdout)")
    s.set_defaults(func=cmd_search)

    e = sub.add_parser("eval", help="score a TREC run against qrels")
    e.add_argument("--results", required=True)
    e.add_argument("--qrels", required=True)
    e.add_argument("--k", type=int, required=True)
    e.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="timed query batches with metrics")
    _add_search_options(bench)
    bench.add_argument("--reps", type=int, default=5)
    bench.add_argument("--qrels", default=None)
    bench.add_argument("--threads", type=int, default=1)
    bench.add_argument("--grid-mu", default="", help="comma-separated mu values to sweep")
    bench.add_argument("--grid-eta", default="", help="comma-separated eta values to sweep")
    bench.add_argument("--budget", type=float, default=0.99, help="recall budget for --grid-*")
    bench.set_defaults(func=cmd_bench)

    syn = sub.add_parser("synth", help="generate a synthetic clustered collection")
    syn.add_argument("--spec", required=True, help="JSON file of SyntheticCorpusSpec fields")
    syn.add_argument("--out", required=True)
    syn.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "k", 1) is not None and getattr(args, "k", 1) < 1:
        raise SystemExit("--k must be positive")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
