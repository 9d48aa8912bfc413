import numpy as np
import pytest

from conftest import brute_scores, corpus_from_impacts, random_corpus, random_query
from superblock.index import (
    DocOrdering,
    build_index,
    index_space_report,
    order_documents,
    superblock_table_bytes,
)


def _bm(index, blk):
    return {t: int(index.block_max.values[t, blk]) for t in range(index.vocab_size)}


def _sb(index, table, s):
    return {t: int(table[t, s]) for t in range(index.vocab_size)}


class TestOrderDocuments:
    def test_identity(self):
        corpus = corpus_from_impacts([{0: 1}, {1: 1}, {2: 1}])
        assert order_documents(corpus, "identity").tolist() == [0, 1, 2]

    def test_greedy_hand_run(self):
        # d0={a}, d1={b}, d2={a}: overlap(d0,d2)=1 beats overlap(d0,d1)=0
        corpus = corpus_from_impacts([{0: 1}, {1: 1}, {0: 1}])
        assert order_documents(corpus, "greedy-similarity").tolist() == [0, 2, 1]

    @pytest.mark.parametrize("strategy", ["identity", "greedy"])
    def test_singleton(self, strategy):
        assert order_documents(corpus_from_impacts([{0: 3}]), strategy).tolist() == [0]

    def test_unknown_strategy(self):
        with pytest.raises(ValueError, match="unknown"):
            order_documents(corpus_from_impacts([{0: 1}]), "bp")

    def test_greedy_matches_quadratic_reference(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            corpus = random_corpus(rng, int(rng.integers(1, 40)), 12, max_terms=5)
            sets = [set(corpus.doc(i).terms.tolist()) for i in range(corpus.num_docs)]
            expect = [0]
            left = set(range(1, corpus.num_docs))
            while left:
                last = sets[expect[-1]]
                nxt = min(left, key=lambda d: (-len(sets[d] & last), d))
                expect.append(nxt)
                left.remove(nxt)
            assert order_documents(corpus, "greedy").tolist() == expect

    def test_ordering_must_be_permutation(self):
        with pytest.raises(ValueError):
            DocOrdering(np.array([0, 0, 1]))


class TestBuildIndex:
    def test_running_example_block_maxima(self, running_index):
        assert _bm(running_index, 0) == {0: 10, 1: 4, 2: 8}
        assert _bm(running_index, 1) == {0: 2, 1: 12, 2: 2}

    def test_running_example_superblock(self, running_index):
        sb = running_index.superblocks
        assert _sb(running_index, sb.max_w, 0) == {0: 10, 1: 12, 2: 8}
        assert _sb(running_index, sb.child_sum, 0) == {0: 12, 1: 16, 2: 10}

    def test_padding_arithmetic(self):
        corpus = corpus_from_impacts([{0: i + 1} for i in range(5)])
        index = build_index(corpus, None, b=2, c=2)
        g = index.geometry
        assert (g.N, g.S) == (3, 2)
        # last superblock has one real child; the missing child adds nothing
        assert index.superblocks.child_sum[0, 1] == 5
        assert index.superblocks.max_w[0, 1] == 5
        assert index.block_documents(2) == [corpus.doc(4)]

    def test_table_dtypes(self, running_index):
        assert running_index.block_max.values.dtype == np.uint8
        assert running_index.superblocks.max_w.dtype == np.uint8
        assert running_index.superblocks.child_sum.dtype == np.uint16

    @pytest.mark.parametrize("c", [0, 257])
    def test_rejects_bad_c(self, running_corpus, c):
        with pytest.raises(ValueError):
            build_index(running_corpus, None, b=2, c=c)

    def test_rejects_empty_corpus(self):
        with pytest.raises(ValueError, match="empty"):
            build_index(corpus_from_impacts([], vocab_size=1), None)

    def test_child_sum_fits_at_c_256(self):
        corpus = corpus_from_impacts([{0: 255}] * 256)
        index = build_index(corpus, None, b=1, c=256)
        assert int(index.superblocks.child_sum[0, 0]) == 255 * 256

    def test_dominance_and_sum_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            corpus = random_corpus(rng, int(rng.integers(1, 60)), 10)
            b, c = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            perm = rng.permutation(corpus.num_docs)
            index = build_index(corpus, DocOrdering(perm), b=b, c=c)
            g = index.geometry
            bm = index.block_max.values.astype(int)
            for p in range(corpus.num_docs):
                blk = p // b
                for t, w in corpus.doc(perm[p]).entries:
                    assert bm[t, blk] >= w
            for blk in range(g.N):
                members = [corpus.doc(perm[p]) for p in range(blk * b, min((blk + 1) * b, g.num_docs))]
                for t in range(corpus.vocab_size):
                    assert bm[t, blk] == max([dict(d.entries).get(t, 0) for d in members])
            for s in range(g.S):
                children = bm[:, s * c : min((s + 1) * c, g.N)]
                assert np.array_equal(index.superblocks.max_w[:, s], children.max(axis=1))
                assert np.array_equal(index.superblocks.child_sum[:, s], children.sum(axis=1))
                assert np.all(index.superblocks.child_sum[:, s].astype(int) <= c * index.superblocks.max_w[:, s].astype(int))

    def test_relabeling_commutes(self):
        rng = np.random.default_rng(5)
        corpus = random_corpus(rng, 37, 9)
        order = rng.permutation(corpus.num_docs)
        pi = rng.permutation(corpus.num_docs)
        docs = [dict(corpus.doc(int(i)).entries) for i in pi]
        permuted = corpus_from_impacts(docs, vocab_size=9, ids=[corpus.external_ids[i] for i in pi])
        inverse = np.argsort(pi)
        a = build_index(corpus, DocOrdering(order), b=3, c=2)
        b = build_index(permuted, DocOrdering(inverse[order]), b=3, c=2)
        assert np.array_equal(a.block_max.values, b.block_max.values)
        assert np.array_equal(a.superblocks.max_w, b.superblocks.max_w)
        assert np.array_equal(a.superblocks.child_sum, b.superblocks.child_sum)
        for name in ("block_ptr", "terms", "term_ptr", "slots", "impacts"):
            assert np.array_equal(getattr(a.forward, name), getattr(b.forward, name))
        assert [a.external_id(p) for p in range(37)] == [b.external_id(p) for p in range(37)]

    def test_forward_index_completeness(self):
        rng = np.random.default_rng(8)
        corpus = random_corpus(rng, 50, 15)
        perm = rng.permutation(50)
        index = build_index(corpus, DocOrdering(perm), b=4, c=3)
        for blk in range(index.geometry.N):
            for slot, doc in enumerate(index.block_documents(blk)):
                assert doc == corpus.doc(perm[blk * 4 + slot])
        for blk in range(index.geometry.N):
            for _, pairs in index.forward.block_postings(blk):
                assert all(slot < 4 for slot, _ in pairs)
        # scoring through reconstructed blocks equals scoring the stored vectors
        q = random_query(rng, 15)
        ref = brute_scores(corpus, q)
        w = dict(q.entries)
        for blk in range(index.geometry.N):
            for slot, doc in enumerate(index.block_documents(blk)):
                assert sum(w.get(t, 0) * x for t, x in doc.entries) == ref[perm[blk * 4 + slot]]


class TestSpaceReport:
    def test_formula_instances(self):
        assert superblock_table_bytes(3, 1) == 9
        assert superblock_table_bytes(3, 2) == 18

    def test_running_example(self, running_index):
        report = index_space_report(running_index)
        assert report["superblock_table_bytes"] == 9
        assert report["block_table_bytes"] == 3 * 2

    def test_two_superblocks(self, running_corpus):
        index = build_index(running_corpus, None, b=1, c=2)
        assert index.geometry.S == 2
        assert index_space_report(index)["superblock_table_bytes"] == 18

    def test_large_collection_extrapolation(self):
        # MS MARCO-like setup: ~1.1M blocks of 8, c=64, 30522-term vocabulary
        n_blocks = 1_100_000
        s = -(-n_blocks // 64)
        size = superblock_table_bytes(30522, s)
        assert 1e9 < size < 1e10
