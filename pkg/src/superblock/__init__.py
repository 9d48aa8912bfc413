"""Top-k learned sparse retrieval with two-level (superblock / block) dynamic pruning."""

from .corpus import (
    Corpus,
    CorpusManifest,
    QuantizationParams,
    QuantizedVector,
    QueryVector,
    load_corpus,
    load_qrels,
    load_queries,
    parse_collection,
    prune_query,
    quantize,
)
from .index import BlockIndex, DocOrdering, build_index, index_space_report, order_documents
from .oracle import ExhaustiveScorer, avg_topk, competitiveness_report, exact_topk
from .search import SearchParams, TopKAccumulator, TraversalStats, search
from .storage import load_index, save_index

__all__ = [
    "BlockIndex",
    "Corpus",
    "CorpusManifest",
    "DocOrdering",
    "ExhaustiveScorer",
    "QuantizationParams",
    "QuantizedVector",
    "QueryVector",
    "SearchParams",
    "TopKAccumulator",
    "TraversalStats",
    "avg_topk",
    "build_index",
    "competitiveness_report",
    "exact_topk",
    "index_space_report",
    "load_corpus",
    "load_index",
    "load_qrels",
    "load_queries",
    "order_documents",
    "parse_collection",
    "prune_query",
    "quantize",
    "save_index",
    "search",
]
