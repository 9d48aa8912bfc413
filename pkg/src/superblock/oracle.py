"""Exhaustive top-k scoring, used as ground truth for the pruned search."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, QueryVector
from .index import BlockIndex
from .search import TraversalStats, as_fraction


@dataclass
class ExactRanking:
    """(doc, score) pairs best first; ``doc`` is the id in original collection order."""

    entries: list[tuple[int, int]]
    external_ids: Sequence[str]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def scores(self) -> list[int]:
        return [s for _, s in self.entries]

    def hits(self) -> list[tuple[str, int]]:
        return [(self.external_ids[d], s) for d, s in self.entries]


def _matrix_from_index(index: BlockIndex) -> sp.csr_matrix:
    # Rebuild the document-term matrix in original order from the forward postings.
    fwd = index.forward
    g = index.geometry
    group_block = np.repeat(np.arange(g.N), np.diff(fwd.block_ptr))
    posting_group = np.repeat(np.arange(fwd.terms.size), np.diff(fwd.term_ptr))
    position = group_block[posting_group] * g.b + fwd.slots.astype(np.int64)
    rows = index.ordering.permutation[position]
    cols = fwd.terms[posting_group].astype(np.int64)
    return sp.csr_matrix(
        (fwd.impacts.astype(np.int64), (rows, cols)), shape=(g.num_docs, index.vocab_size)
    )


class ExhaustiveScorer:
    """Scores every document by direct summation; no bounds, no skipping."""

    def __init__(self, source: Corpus | BlockIndex):
        if isinstance(source, BlockIndex):
            self.matrix = _matrix_from_index(source)
            self.external_ids = source.manifest.external_ids
        else:
            self.matrix = sp.csr_matrix(
                (source.impacts.astype(np.int64), source.terms.astype(np.int64), source.doc_ptr),
                shape=(source.num_docs, source.vocab_size),
            )
            self.external_ids = source.external_ids
        ids = self.external_ids
        by_id = sorted(range(len(ids)), key=ids.__getitem__)
        self.rank = np.empty(len(ids), dtype=np.int64)
        self.rank[by_id] = np.arange(len(ids))

    @property
    def num_docs(self) -> int:
        return self.matrix.shape[0]

    def scores(self, q: QueryVector) -> np.ndarray:
        dense = np.zeros(self.matrix.shape[1], np.int64)
        keep = q.terms < dense.size
        dense[q.terms[keep]] = q.weights[keep]
        return self.matrix @ dense

    def topk(self, q: QueryVector, k: int) -> ExactRanking:
        if k < 1:
            raise ValueError("k must be positive")
        scores = self.scores(q)
        cand = np.flatnonzero(scores > 0)
        if cand.size > k:
            # Everything tied with the k-th score stays in play for the id tie-break.
            kth = np.partition(scores[cand], cand.size - k)[cand.size - k]
            cand = cand[scores[cand] >= kth]
        order = np.lexsort((self.rank[cand], -scores[cand]))[:k]
        top = cand[order]
        return ExactRanking([(int(d), int(scores[d])) for d in top], self.external_ids)

    def search(self, q: QueryVector, params) -> tuple[list[tuple[str, int]], TraversalStats]:
        """Same call shape as :func:`superblock.search.search`; beta pruning is not applied."""
        ranking = self.topk(q, params.k)
        return ranking.hits(), TraversalStats(docs_scored=self.num_docs)


def exact_topk(source: Corpus | BlockIndex | ExhaustiveScorer, q: QueryVector, k: int) -> ExactRanking:
    scorer = source if isinstance(source, ExhaustiveScorer) else ExhaustiveScorer(source)
    return scorer.topk(q, k)


def _scores_of(ranking) -> list[int]:
    if isinstance(ranking, ExactRanking):
        return ranking.scores
    out = []
    for item in ranking:
        out.append(int(item[1]) if isinstance(item, tuple) else int(item))
    return out


def avg_topk(ranking, k_prime: int) -> Fraction:
    """Exact mean of the first ``k_prime`` scores of a ranking."""
    scores = _scores_of(ranking)
    if not 1 <= k_prime <= len(scores):
        raise ValueError(f"k' = {k_prime} outside [1, {len(scores)}]")
    return Fraction(sum(scores[:k_prime]), k_prime)


@dataclass
class CompetitivenessReport:
    ok: bool
    worst_ratio: Fraction | None
    failing_k_prime: int | None


def competitiveness_report(
    sp_result,
    oracle_result,
    mu,
    k: int,
    *,
    sp_fingerprint: str | None = None,
    oracle_fingerprint: str | None = None,
) -> CompetitivenessReport:
    """Check ``Avg(k', pruned) >= mu * Avg(k', exact)`` for every k' up to k."""
    if sp_fingerprint is not None and oracle_fingerprint is not None and sp_fingerprint != oracle_fingerprint:
        raise ValueError("results come from different (corpus, query) pairs")
    mu = as_fraction(mu)
    ours, best = _scores_of(sp_result), _scores_of(oracle_result)
    depth = min(k, len(ours), len(best))
    worst = None
    failing = None
    sum_ours = sum_best = 0
    for kp in range(1, depth + 1):
        sum_ours += ours[kp - 1]
        sum_best += best[kp - 1]
        if sum_best > 0:
            ratio = Fraction(sum_ours, sum_best)
            if worst is None or ratio < worst:
                worst = ratio
        if failing is None and sum_ours < mu * sum_best:
            failing = kp
    return CompetitivenessReport(ok=failing is None, worst_ratio=worst, failing_k_prime=failing)


def query_fingerprint(external_ids: Sequence[str], q: QueryVector) -> str:
    h = hashlib.sha1()
    h.update("\x00".join(external_ids).encode())
    h.update(q.terms.tobytes())
    h.update(q.weights.tobytes())
    return h.hexdigest()
