"""Query-batch runner: latency protocol, relevance metrics and pruning counters."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import QueryVector
from .index import BlockIndex
from .metrics import Qrels, has_relevant, mrr_at_10, ndcg_at_10, recall_at_k, recall_budget_eval
from .search import SearchParams, TraversalStats, search

# Warm-index timing: the first two passes are discarded.
WARMUP_PASSES = 2


@dataclass
class MetricReport:
    num_queries: int
    k: int
    mean_latency_ms: float
    mean_stats: dict[str, float]
    mrr_at_10: float | None = None
    recall_at_k: float | None = None
    ndcg_at_10: float | None = None
    per_query: dict[str, dict[str, float]] = field(default_factory=dict)
    queries_without_relevant: list[str] = field(default_factory=list)
    pass_latencies_ms: list[float] = field(default_factory=list)
    rankings: dict[str, list[tuple[str, int]]] = field(default_factory=dict, repr=False)

    def as_dict(self, per_query: bool = False) -> dict:
        out = {
            "num_queries": self.num_queries,
            "k": self.k,
            "mean_latency_ms": self.mean_latency_ms,
            "mean_stats": self.mean_stats,
            "mrr_at_10": self.mrr_at_10,
            "recall_at_k": self.recall_at_k,
            "ndcg_at_10": self.ndcg_at_10,
            "queries_without_relevant": self.queries_without_relevant,
            "pass_latencies_ms": self.pass_latencies_ms,
        }
        if per_query:
            out["per_query"] = self.per_query
        return out


def evaluate_rankings(rankings: dict[str, Sequence], qrels: Qrels, k: int) -> dict:
    """Per-query and mean MRR@10, Recall@k and nDCG@10 over the queries in ``rankings``."""
    per_query = {}
    flagged = []
    for qid, ranking in rankings.items():
        judged = qrels.get(qid, {})
        if not has_relevant(judged):
            flagged.append(qid)
        per_query[qid] = {
            "mrr_at_10": float(mrr_at_10(ranking, judged)),
            "recall_at_k": float(recall_at_k(ranking, judged, k)),
            "ndcg_at_10": ndcg_at_10(ranking, judged),
        }
    n = max(len(per_query), 1)
    means = {
        m: sum(v[m] for v in per_query.values()) / n for m in ("mrr_at_10", "recall_at_k", "ndcg_at_10")
    }
    return {"means": means, "per_query": per_query, "flagged": flagged}


def _run_one(engine, q: QueryVector, params: SearchParams):
    t0 = time.perf_counter()
    if isinstance(engine, BlockIndex):
        hits, stats = search(engine, q, params)
    else:
        hits, stats = engine.search(q, params)
    return hits, stats, time.perf_counter() - t0


def run_benchmark(
    engine,
    queries: Sequence[tuple[str, QueryVector]],
    params: SearchParams,
    repetitions: int = 5,
    qrels: Qrels | None = None,
    *,
    require_metrics: bool = False,
    threads: int = 1,
) -> MetricReport:
    """Run every query ``repetitions`` times and report the warm passes.

    ``engine`` is a :class:`BlockIndex` or anything with a
    ``search(query, params)`` method (e.g. the exhaustive scorer). Latency is
    the mean per-query wall time over passes 3..repetitions; rankings,
    metrics and counters come from the final pass.
    """
    if repetitions < WARMUP_PASSES + 1:
        raise ValueError(f"repetitions must be at least {WARMUP_PASSES + 1}")
    if require_metrics and qrels is None:
        raise ValueError("metrics requested but no qrels supplied")
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    pass_latencies = []
    try:
        for _ in range(repetitions):
            if pool is None:
                results = [_run_one(engine, q, params) for _, q in queries]
            else:
                results = list(pool.map(lambda item: _run_one(engine, item[1], params), queries))
            pass_latencies.append(1000.0 * sum(r[2] for r in results) / max(len(results), 1))
    finally:
        if pool is not None:
            pool.shutdown()
    warm = pass_latencies[WARMUP_PASSES:]
    stats = [r[1] for r in results]
    mean_stats = {
        name: float(np.mean([getattr(s, name) for s in stats])) if stats else 0.0
        for name in TraversalStats().as_dict()
    }
    report = MetricReport(
        num_queries=len(queries),
        k=params.k,
        mean_latency_ms=sum(warm) / len(warm),
        mean_stats=mean_stats,
        pass_latencies_ms=pass_latencies,
        rankings={qid: r[0] for (qid, _), r in zip(queries, results)},
    )
    if qrels is not None:
        ev = evaluate_rankings(report.rankings, qrels, params.k)
        report.mrr_at_10 = ev["means"]["mrr_at_10"]
        report.recall_at_k = ev["means"]["recall_at_k"]
        report.ndcg_at_10 = ev["means"]["ndcg_at_10"]
        report.per_query = ev["per_query"]
        report.queries_without_relevant = ev["flagged"]
    return report


def grid_sweep(
    engine,
    queries: Sequence[tuple[str, QueryVector]],
    base: SearchParams,
    qrels: Qrels,
    mus: Sequence,
    etas: Sequence,
    repetitions: int = 3,
    budget: float = 0.99,
) -> list[dict]:
    """Evaluate each valid (mu, eta) pair against safe search under a recall budget."""
    safe = run_benchmark(engine, queries, replace(base, mu=1, eta=1), repetitions, qrels)
    rows = []
    for mu in mus:
        for eta in etas:
            try:
                params = replace(base, mu=mu, eta=eta)
            except ValueError:
                continue
            rep = run_benchmark(engine, queries, params, repetitions, qrels)
            rows.append(
                {
                    "mu": str(params.mu),
                    "eta": str(params.eta),
                    "mean_latency_ms": rep.mean_latency_ms,
                    "recall_at_k": rep.recall_at_k,
                    "mrr_at_10": rep.mrr_at_10,
                    "safe_recall_at_k": safe.recall_at_k,
                    "within_budget": recall_budget_eval(safe.recall_at_k, rep.recall_at_k, budget),
                    "mean_stats": rep.mean_stats,
                }
            )
    return rows
