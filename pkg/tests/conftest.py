import numpy as np
import pytest

from superblock.corpus import Corpus, QuantizedVector, QueryVector, RawVector

# Running example: b=2, c=2, d0={t0:10,t1:4}, d1={t0:6,t2:8}, d2={t1:12}, d3={t0:2,t1:2,t2:2}
RUNNING_DOCS = [{0: 10, 1: 4}, {0: 6, 2: 8}, {1: 12}, {0: 2, 1: 2, 2: 2}]


def corpus_from_impacts(docs, vocab_size=None, ids=None):
    """Corpus whose quantized impacts are exactly the given integers (scale 1)."""
    vocab_size = vocab_size or (1 + max((t for d in docs for t in d), default=0))
    ids = ids or [f"d{i}" for i in range(len(docs))]
    raws = [
        RawVector(np.array(sorted(d), dtype=np.int64), np.array([float(d[t]) for t in sorted(d)]))
        for d in docs
    ]
    from superblock.corpus import QuantizationParams

    return Corpus.from_raw(ids, [f"t{i}" for i in range(vocab_size)], raws, QuantizationParams(1.0))


def brute_scores(corpus, q: QueryVector) -> list[int]:
    """Score every document with plain Python dictionaries."""
    weights = dict(q.entries)
    return [sum(weights.get(t, 0) * w for t, w in corpus.doc(i).entries) for i in range(corpus.num_docs)]


def brute_topk(corpus, q: QueryVector, k: int) -> list[tuple[str, int]]:
    scores = brute_scores(corpus, q)
    ids = corpus.external_ids
    ranked = sorted(((s, ids[i]) for i, s in enumerate(scores) if s > 0), key=lambda x: (-x[0], x[1]))
    return [(d, s) for s, d in ranked[:k]]


@pytest.fixture
def running_corpus():
    return corpus_from_impacts(RUNNING_DOCS)


@pytest.fixture
def running_index(running_corpus):
    from superblock.index import build_index

    return build_index(running_corpus, None, b=2, c=2)


@pytest.fixture
def running_query():
    return QueryVector.from_entries({0: 1, 1: 2})


def random_corpus(rng, num_docs, vocab_size, max_terms=6, max_impact=255):
    docs = []
    for _ in range(num_docs):
        n = int(rng.integers(0, max_terms + 1))
        terms = rng.choice(vocab_size, size=min(n, vocab_size), replace=False)
        docs.append({int(t): int(rng.integers(1, max_impact + 1)) for t in terms})
    return corpus_from_impacts(docs, vocab_size=vocab_size)


def random_query(rng, vocab_size, max_terms=4, max_weight=5):
    n = int(rng.integers(1, max_terms + 1))
    terms = rng.choice(vocab_size, size=min(n, vocab_size), replace=False)
    return QueryVector.from_entries({int(t): int(rng.integers(1, max_weight + 1)) for t in terms})


# acceptance summary lines, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


_L3 = 1 / np.log2(3)
# (ranking, qrels, k, mrr@10, recall@k, ndcg@10), values worked out by hand
METRIC_FIXTURES = [
    (["a", "b", "c"], {"a": 1}, 10, 1.0, 1.0, 1.0),
    (["x", "y", "a"], {"a": 1}, 10, 1 / 3, 1.0, 0.5),
    (["x", "a"], {"a": 1}, 10, 0.5, 1.0, _L3),
    ([f"n{i}" for i in range(10)] + ["a"], {"a": 1}, 10, 0.0, 0.0, 0.0),
    (["a", "x", "b", "y"], dict.fromkeys("abcd", 1), 4, 1.0, 0.5, 1.5 / (1 + _L3 + 0.5 + 1 / np.log2(5))),
    (["a"], {}, 10, 0.0, 1.0, 0.0),
    (["b", "a"], {"a": 2, "b": 1}, 10, 1.0, 1.0, (1 + 3 * _L3) / (3 + _L3)),
    (["a", "b"], {"a": 0, "b": 1}, 10, 0.5, 1.0, _L3),
    (["a"], {"a": 1}, 0, 1.0, 0.0, 1.0),
    ([("q", 5), ("a", 3)], {"a": 3, "z": 1}, 1, 0.5, 0.0, 7 * _L3 / (7 + _L3)),
]
