"""Block / superblock partitioning, score-bound tables and the per-block forward index."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .corpus import Corpus, CorpusManifest, QuantizedVector

MAX_CHILDREN = 256
DEFAULT_BLOCK_SIZE = 8
DEFAULT_SUPERBLOCK_SIZE = 64

ORDER_STRATEGIES = ("identity", "greedy")
_STRATEGY_ALIASES = {"identity": "identity", "greedy": "greedy", "greedy-similarity": "greedy"}


@dataclass(frozen=True)
class PartitionGeometry:
    b: int
    c: int
    N: int
    S: int
    num_docs: int

    @classmethod
    def for_corpus(cls, num_docs: int, b: int, c: int) -> "PartitionGeometry":
        if b < 1:
            raise ValueError(f"block size b must be >= 1, got {b}")
        if not 1 <= c <= MAX_CHILDREN:
            raise ValueError(
                f"superblock size c must lie in [1, {MAX_CHILDREN}] so child sums fit 16 bits, got {c}"
            )
        N = math.ceil(num_docs / b)
        return cls(b=b, c=c, N=N, S=math.ceil(N / c), num_docs=num_docs)


@dataclass(eq=False)
class BlockMaxTable:
    """``values[t, B]`` is the largest impact of term t inside block B (term-major)."""

    values: np.ndarray  # (vocab, N) uint8


@dataclass(eq=False)
class SuperblockTable:
    """Per-term superblock maximum and exact sum of the child block maxima."""

    max_w: np.ndarray  # (vocab, S) uint8
    child_sum: np.ndarray  # (vocab, S) uint16


@dataclass(eq=False)
class ForwardBlockIndex:
    """Term-grouped postings per block.

    Groups ``block_ptr[B]:block_ptr[B+1]`` belong to block B; group g holds
    term ``terms[g]`` and (slot, impact) pairs ``term_ptr[g]:term_ptr[g+1]``.
    """

    block_ptr: np.ndarray  # (N+1,) int64
    terms: np.ndarray  # (G,) int32
    term_ptr: np.ndarray  # (G+1,) int64
    slots: np.ndarray  # (P,) uint32
    impacts: np.ndarray  # (P,) uint8

    def block_postings(self, blk: int) -> list[tuple[int, list[tuple[int, int]]]]:
        out = []
        for g in range(self.block_ptr[blk], self.block_ptr[blk + 1]):
            lo, hi = self.term_ptr[g], self.term_ptr[g + 1]
            out.append(
                (int(self.terms[g]), list(zip(self.slots[lo:hi].tolist(), self.impacts[lo:hi].tolist())))
            )
        return out

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.block_ptr, self.terms, self.term_ptr, self.slots, self.impacts))


@dataclass(frozen=True, eq=False)
class DocOrdering:
    """``permutation[p]`` is the original document id placed at position p."""

    permutation: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("ordering must be a permutation of [0, num_docs)")
        object.__setattr__(self, "permutation", perm)

    def __len__(self) -> int:
        return int(self.permutation.size)

    def tolist(self) -> list[int]:
        return self.permutation.tolist()


def order_documents(corpus: Corpus, strategy: str = "identity") -> DocOrdering:
    """Choose the document order that blocks are cut from.

    ``greedy`` starts from document 0 and keeps appending the unplaced document
    sharing the most terms with the last one placed (ties to the lower id).
    """
    try:
        strategy = _STRATEGY_ALIASES[strategy]
    except KeyError:
        raise ValueError(f"unknown ordering strategy {strategy!r}; expected one of {ORDER_STRATEGIES}") from None
    n = corpus.num_docs
    if n == 0:
        raise ValueError("cannot order an empty corpus")
    if strategy == "identity" or n == 1:
        return DocOrdering(np.arange(n, dtype=np.int64))
    terms = corpus.terms.astype(np.int64)
    owner = np.repeat(np.arange(n, dtype=np.int64), np.diff(corpus.doc_ptr))
    by_term = np.argsort(terms, kind="stable")
    inv_docs = owner[by_term]
    inv_ptr = np.zeros(corpus.vocab_size + 1, dtype=np.int64)
    np.cumsum(np.bincount(terms, minlength=corpus.vocab_size), out=inv_ptr[1:])
    return DocOrdering(_kernels.greedy_order(corpus.doc_ptr.astype(np.int64), terms, inv_ptr, inv_docs))


@dataclass(eq=False)
class BlockIndex:
    geometry: PartitionGeometry
    block_max: BlockMaxTable
    superblocks: SuperblockTable
    forward: ForwardBlockIndex
    manifest: CorpusManifest
    vocab: list[str]
    ordering: DocOrdering

    @property
    def vocab_size(self) -> int:
        return self.manifest.vocab_size

    @property
    def num_docs(self) -> int:
        return self.geometry.num_docs

    def external_id(self, position: int) -> str:
        return self.manifest.external_ids[self.ordering.permutation[position]]

    @cached_property
    def term_ids(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.vocab)}

    @cached_property
    def position_rank(self) -> np.ndarray:
        """Rank of each position's external id in ascending string order."""
        ids = self.manifest.external_ids
        by_id = sorted(range(len(ids)), key=ids.__getitem__)
        rank = np.empty(len(ids), dtype=np.int64)
        rank[by_id] = np.arange(len(ids))
        return rank[self.ordering.permutation]

    @cached_property
    def block_rank(self) -> np.ndarray:
        """Best (lowest) tie rank in each block."""
        g = self.geometry
        padded = np.full(g.N * g.b, _kernels.NO_RANK, dtype=np.int64)
        padded[: g.num_docs] = self.position_rank
        return padded.reshape(g.N, g.b).min(axis=1)

    @cached_property
    def superblock_rank(self) -> np.ndarray:
        g = self.geometry
        padded = np.full(g.S * g.c, _kernels.NO_RANK, dtype=np.int64)
        padded[: g.N] = self.block_rank
        return padded.reshape(g.S, g.c).min(axis=1)

    def block_documents(self, blk: int) -> list[QuantizedVector]:
        """Reconstruct the real documents of a block from its forward postings."""
        g = self.geometry
        n = min(g.b, g.num_docs - blk * g.b)
        per_slot: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for term, pairs in self.forward.block_postings(blk):
            for slot, impact in pairs:
                per_slot[slot].append((term, impact))
        return [QuantizedVector.from_entries(sorted(e)) for e in per_slot]

    def structurally_equal(self, other: "BlockIndex") -> bool:
        arrays = lambda ix: (  # noqa: E731
            ix.block_max.values,
            ix.superblocks.max_w,
            ix.superblocks.child_sum,
            ix.forward.block_ptr,
            ix.forward.terms,
            ix.forward.term_ptr,
            ix.forward.slots,
            ix.forward.impacts,
            ix.ordering.permutation,
        )
        return (
            self.geometry == other.geometry
            and self.manifest == other.manifest
            and self.vocab == other.vocab
            and all(
                a.dtype == b.dtype and np.array_equal(a, b)
                for a, b in zip(arrays(self), arrays(other))
            )
        )


def build_index(
    corpus: Corpus,
    ordering: DocOrdering | None = None,
    b: int = DEFAULT_BLOCK_SIZE,
    c: int = DEFAULT_SUPERBLOCK_SIZE,
) -> BlockIndex:
    n = corpus.num_docs
    if n == 0:
        raise ValueError("cannot index an empty corpus")
    geom = PartitionGeometry.for_corpus(n, b, c)
    if ordering is None:
        ordering = DocOrdering(np.arange(n, dtype=np.int64))
    if len(ordering) != n:
        raise ValueError("ordering length does not match the corpus")
    perm = ordering.permutation
    V = corpus.vocab_size

    # Gather postings in ordered-position order.
    lengths = np.diff(corpus.doc_ptr)[perm]
    starts = corpus.doc_ptr[:-1][perm]
    pos = np.repeat(np.arange(n, dtype=np.int64), lengths)
    src = np.repeat(starts - np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths) + np.arange(
        lengths.sum(), dtype=np.int64
    )
    terms = corpus.terms[src].astype(np.int64)
    impacts = corpus.impacts[src]
    blocks = pos // b
    slots = pos % b

    block_max = np.zeros((V, geom.N), dtype=np.uint8)
    np.maximum.at(block_max, (terms, blocks), impacts)

    padded = np.zeros((V, geom.S * c), dtype=np.uint8)
    padded[:, : geom.N] = block_max
    grouped = padded.reshape(V, geom.S, c)
    sb_max = grouped.max(axis=2)
    sb_sum = grouped.sum(axis=2, dtype=np.int64).astype(np.uint16)

    order = np.lexsort((slots, terms, blocks))
    terms, impacts, blocks, slots = terms[order], impacts[order], blocks[order], slots[order]
    key = blocks * max(V, 1) + terms
    group_start = np.flatnonzero(np.concatenate(([True], key[1:] != key[:-1]))) if key.size else np.zeros(0, np.int64)
    term_ptr = np.append(group_start, key.size).astype(np.int64)
    block_ptr = np.searchsorted(blocks[group_start], np.arange(geom.N + 1)).astype(np.int64)
    forward = ForwardBlockIndex(
        block_ptr=block_ptr,
        terms=terms[group_start].astype(np.int32),
        term_ptr=term_ptr,
        slots=slots.astype(np.uint32),
        impacts=impacts.astype(np.uint8),
    )
    return BlockIndex(
        geometry=geom,
        block_max=BlockMaxTable(block_max),
        superblocks=SuperblockTable(sb_max.astype(np.uint8), sb_sum),
        forward=forward,
        manifest=corpus.manifest,
        vocab=list(corpus.vocab),
        ordering=ordering,
    )


def index_space_report(index: BlockIndex) -> dict[str, int]:
    return {
        "superblock_table_bytes": int(index.superblocks.max_w.nbytes + index.superblocks.child_sum.nbytes),
        "block_table_bytes": int(index.block_max.values.nbytes),
        "forward_bytes": int(index.forward.nbytes),
    }


def superblock_table_bytes(vocab_size: int, num_superblocks: int) -> int:
    # One byte of maximum plus two bytes of child sum per (term, superblock).
    return vocab_size * num_superblocks * 3
