from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import METRIC_FIXTURES
from superblock.metrics import (
    has_relevant,
    mrr_at_10,
    ndcg_at_10,
    recall_at_k,
    recall_budget_eval,
    recall_budget_threshold,
)


@pytest.mark.parametrize("ranking,qrels,k,mrr,recall,ndcg", METRIC_FIXTURES)
def test_fixture(ranking, qrels, k, mrr, recall, ndcg):
    assert float(mrr_at_10(ranking, qrels)) == pytest.approx(mrr, abs=1e-9)
    assert float(recall_at_k(ranking, qrels, k)) == pytest.approx(recall, abs=1e-9)
    assert ndcg_at_10(ranking, qrels) == pytest.approx(ndcg, abs=1e-9)


def test_exact_rationals():
    assert mrr_at_10(["x", "y", "a"], {"a": 1}) == Fraction(1, 3)
    assert recall_at_k(["a", "x", "b"], dict.fromkeys("abcd", 1), 3) == Fraction(1, 2)


def test_ndcg_rank_two():
    assert ndcg_at_10(["x", "a"], {"a": 1}) == pytest.approx(0.6309, abs=1e-4)


def test_no_relevant_is_flagged():
    assert not has_relevant({"a": 0})
    assert has_relevant({"a": 2})


class TestRecallBudget:
    def test_threshold_percent_scale(self):
        assert recall_budget_threshold(98.36, 0.99) == pytest.approx(97.3764)
        assert round(recall_budget_threshold(98.36, 0.99), 2) == 97.38

    def test_pass_and_fail(self):
        assert recall_budget_eval(98.36, 97.38, 0.99)
        assert not recall_budget_eval(98.36, 97.00, 0.99)

    def test_boundary(self):
        assert recall_budget_eval(0.9, 0.9, 1.0)

    def test_unit_and_percent_agree(self):
        assert recall_budget_eval(0.9836, 0.9738, 0.99) == recall_budget_eval(98.36, 97.38, 0.99)

    @pytest.mark.parametrize("budget", [0, -0.5, 1.01])
    def test_budget_range(self, budget):
        with pytest.raises(ValueError):
            recall_budget_eval(0.9, 0.9, budget)


_ids = st.lists(st.sampled_from("abcdefghijklmnop"), unique=True, max_size=16)


@given(_ids, st.dictionaries(st.sampled_from("abcdefghijklmnop"), st.integers(0, 3)), st.integers(0, 20))
def test_metrics_in_unit_interval(ranking, qrels, k):
    for value in (mrr_at_10(ranking, qrels), recall_at_k(ranking, qrels, k), ndcg_at_10(ranking, qrels)):
        assert 0 <= value <= 1 + 1e-12


@given(_ids, st.dictionaries(st.sampled_from("abcdefghijklmnop"), st.integers(0, 3)))
def test_reference_implementations(ranking, qrels):
    relevant = [d for d in ranking[:10] if qrels.get(d, 0) >= 1]
    expect = Fraction(1, ranking.index(relevant[0]) + 1) if relevant else 0
    assert mrr_at_10(ranking, qrels) == expect
    rel = {d for d, g in qrels.items() if g >= 1}
    if rel:
        assert recall_at_k(ranking, qrels, 10) == Fraction(len(rel & set(ranking[:10])), len(rel))
