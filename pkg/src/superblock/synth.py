"""Clustered synthetic sparse collections with oracle-derived relevance labels.

The vocabulary is split into disjoint per-cluster term pools. Each document
belongs to one cluster and draws its terms from that pool; a small "core" of
the pool is favoured with probability ``intra_cluster_term_overlap``, so high
overlap means documents of a cluster share most of their terms. An optional
``background_fraction`` of terms comes from the whole vocabulary instead.
Documents are emitted in random cluster order, leaving locality for a
reordering step to recover.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, QueryVector, RawVector, write_qrels
from .oracle import ExhaustiveScorer

_ZIPF = re.compile(r"zipf\(\s*([0-9.]+)\s*\)$")
_ZIPF_CAP = 100


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    num_docs: int = 1000
    vocab_size: int = 1000
    terms_per_doc: int = 24
    num_clusters: int = 16
    intra_cluster_term_overlap: float = 0.8
    weights: str = "zipf(1.5)"
    seed: int = 0
    num_queries: int = 20
    terms_per_query: int = 6
    background_fraction: float = 0.0
    qrels_depth: int = 10

    def __post_init__(self):
        if self.num_docs < 1:
            raise ValueError("num_docs must be positive")
        if self.terms_per_doc < 1 or self.terms_per_query < 1:
            raise ValueError("terms_per_doc and terms_per_query must be positive")
        if self.vocab_size < self.terms_per_doc:
            raise ValueError("vocab too small for terms_per_doc")
        if not 1 <= self.num_clusters <= self.vocab_size:
            raise ValueError("num_clusters must lie in [1, vocab_size]")
        if self.vocab_size // self.num_clusters < self.terms_per_doc:
            raise ValueError("vocab too small for terms_per_doc: cluster term pools are smaller than a document")
        if not 0 <= self.intra_cluster_term_overlap <= 1:
            raise ValueError("intra_cluster_term_overlap must lie in [0, 1]")
        if not 0 <= self.background_fraction <= 1:
            raise ValueError("background_fraction must lie in [0, 1]")
        self.weight_law()

    def weight_law(self) -> tuple[str, float]:
        if self.weights == "uniform":
            return "uniform", 0.0
        m = _ZIPF.match(self.weights)
        if not m or float(m.group(1)) <= 1:
            raise ValueError(f"weights must be 'uniform' or 'zipf(s)' with s > 1, got {self.weights!r}")
        return "zipf", float(m.group(1))

    @classmethod
    def from_json(cls, path: str | Path) -> "SyntheticCorpusSpec":
        return cls(**json.loads(Path(path).read_text()))


@dataclass
class SyntheticCollection:
    spec: SyntheticCorpusSpec
    corpus: Corpus
    documents: list[RawVector]
    queries: list[tuple[str, QueryVector]]
    raw_queries: list[tuple[str, dict[int, float]]]
    qrels: dict[str, dict[str, int]]
    doc_cluster: np.ndarray
    query_cluster: np.ndarray

    def write(self, out_dir: str | Path) -> dict[str, str]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        vocab = self.corpus.vocab
        paths = {"docs": out / "docs.jsonl", "queries": out / "queries.jsonl", "qrels": out / "qrels.tsv"}
        with open(paths["docs"], "w", encoding="utf-8") as fh:
            for ext, vec in zip(self.corpus.external_ids, self.documents):
                record = {vocab[t]: w for t, w in zip(vec.terms.tolist(), vec.weights.tolist())}
                fh.write(json.dumps({"id": ext, "vector": record}) + "\n")
        with open(paths["queries"], "w", encoding="utf-8") as fh:
            for qid, raw in self.raw_queries:
                fh.write(json.dumps({"id": qid, "vector": {vocab[t]: w for t, w in raw.items()}}) + "\n")
        with open(paths["qrels"], "w", encoding="utf-8") as fh:
            write_qrels(self.qrels, fh)
        return {k: str(v) for k, v in paths.items()}


def _draw_weights(rng: np.random.Generator, law: str, s: float, n: int) -> np.ndarray:
    if law == "uniform":
        w = rng.uniform(0.05, 1.0, n)
    else:
        r = np.minimum(rng.zipf(s, n), _ZIPF_CAP)
        w = r * rng.uniform(0.5, 1.0, n)
    return np.round(w, 4)


def _cluster_terms(rng, pool, log_p, counts):
    """Weighted sampling without replacement (Gumbel top-k), one row per document."""
    out = []
    chunk = max(1, 4_000_000 // max(pool.size, 1))
    for lo in range(0, counts.size, chunk):
        cnt = counts[lo : lo + chunk]
        keys = log_p + rng.gumbel(size=(cnt.size, pool.size))
        order = np.argsort(-keys, axis=1)
        for row, n in zip(order, cnt.tolist()):
            out.append(pool[row[:n]])
    return out


def generate_synthetic(spec: SyntheticCorpusSpec) -> SyntheticCollection:
    rng = np.random.default_rng(spec.seed)
    law, s = spec.weight_law()
    V, n, tpd = spec.vocab_size, spec.num_docs, spec.terms_per_doc
    pools = np.array_split(rng.permutation(V), spec.num_clusters)
    log_probs = []
    for pool in pools:
        core = min(pool.size, 2 * tpd)
        p = np.full(pool.size, (1 - spec.intra_cluster_term_overlap) / pool.size)
        p[:core] += spec.intra_cluster_term_overlap / core
        with np.errstate(divide="ignore"):
            log_probs.append(np.log(p))

    doc_cluster = rng.integers(spec.num_clusters, size=n)
    n_background = rng.binomial(tpd, spec.background_fraction, size=n)
    doc_terms: list[np.ndarray | None] = [None] * n
    for j, pool in enumerate(pools):
        members = np.flatnonzero(doc_cluster == j)
        if members.size == 0:
            continue
        drawn = _cluster_terms(rng, pool, log_probs[j], tpd - n_background[members])
        for d, terms in zip(members.tolist(), drawn):
            doc_terms[d] = terms

    documents = []
    for d in range(n):
        terms = doc_terms[d]
        if n_background[d]:
            terms = np.concatenate([terms, rng.choice(V, n_background[d], replace=False)])
        terms = np.unique(terms)
        documents.append(RawVector(terms.astype(np.int64), _draw_weights(rng, law, s, terms.size)))

    vocab = [f"t{i}" for i in range(V)]
    external_ids = [f"d{i}" for i in range(n)]
    corpus = Corpus.from_raw(external_ids, vocab, documents)

    query_cluster = rng.integers(spec.num_clusters, size=spec.num_queries)
    queries, raw_queries = [], []
    for i, j in enumerate(query_cluster.tolist()):
        pool = pools[j]
        m = min(spec.terms_per_query, pool.size)
        p = np.exp(log_probs[j])
        terms = np.sort(rng.choice(pool, m, replace=False, p=p / p.sum()))
        weights = np.round(rng.uniform(0.2, 3.0, m), 2)
        qid = f"q{i}"
        raw_queries.append((qid, dict(zip(terms.tolist(), weights.tolist()))))
        # Query weights use the default x100 integer scaling.
        queries.append((qid, QueryVector(terms, np.rint(weights * 100).astype(np.int64))))

    scorer = ExhaustiveScorer(corpus)
    qrels = {}
    for qid, q in queries:
        top = scorer.topk(q, spec.qrels_depth)
        qrels[qid] = {corpus.external_ids[d]: 1 for d, _ in top.entries}
    return SyntheticCollection(
        spec, corpus, documents, queries, raw_queries, qrels, doc_cluster, query_cluster
    )


def write_spec(spec: SyntheticCorpusSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(asdict(spec), indent=2))
