"""Ranking metrics: MRR@10, Recall@k, nDCG@10 and the recall-budget test."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping, Sequence

Qrels = dict[str, dict[str, int]]


def _doc_ids(ranking: Sequence) -> list[str]:
    return [r[0] if isinstance(r, tuple) else r for r in ranking]


def mrr_at_10(ranking: Sequence, qrels_for_query: Mapping[str, int]) -> Fraction:
    for rank, doc in enumerate(_doc_ids(ranking)[:10], start=1):
        if qrels_for_query.get(doc, 0) >= 1:
            return Fraction(1, rank)
    return Fraction(0)


def has_relevant(qrels_for_query: Mapping[str, int]) -> bool:
    return any(g >= 1 for g in qrels_for_query.values())


def recall_at_k(ranking: Sequence, qrels_for_query: Mapping[str, int], k: int) -> Fraction:
    """Fraction of relevant documents found in the top k.

    A query without relevant documents scores 1; callers flag such queries
    via :func:`has_relevant`.
    """
    relevant = {d for d, g in qrels_for_query.items() if g >= 1}
    if k <= 0:
        return Fraction(0)
    if not relevant:
        return Fraction(1)
    found = sum(1 for d in _doc_ids(ranking)[:k] if d in relevant)
    return Fraction(found, len(relevant))


def ndcg_at_10(ranking: Sequence, qrels_for_query: Mapping[str, int]) -> float:
    """trec_eval convention: gain 2^grade - 1, discount log2(rank + 1)."""
    dcg = sum(
        (2 ** qrels_for_query.get(doc, 0) - 1) / math.log2(rank + 1)
        for rank, doc in enumerate(_doc_ids(ranking)[:10], start=1)
    )
    ideal = sorted((g for g in qrels_for_query.values() if g > 0), reverse=True)[:10]
    idcg = sum((2**g - 1) / math.log2(rank + 1) for rank, g in enumerate(ideal, start=1))
    if idcg == 0:
        return 0.0
    return dcg / idcg


def recall_budget_threshold(safe_recall: float, budget: float) -> float:
    """Lowest recall that still meets ``budget``, on the scale ``safe_recall`` uses."""
    if not 0 < budget <= 1:
        raise ValueError(f"budget must lie in (0, 1], got {budget}")
    return budget * safe_recall


def recall_budget_eval(safe_recall: float, achieved_recall: float, budget: float) -> bool:
    """True iff achieved recall is at least ``budget`` times the safe-search recall.

    Recalls on a 0-100 scale are accepted; if either value exceeds 1 both are
    read as percentages.
    """
    if safe_recall < 0 or achieved_recall < 0:
        raise ValueError("recall values must be non-negative")
    if max(safe_recall, achieved_recall) > 1:
        safe_recall, achieved_recall = safe_recall / 100, achieved_recall / 100
    return achieved_recall >= recall_budget_threshold(safe_recall, budget)
