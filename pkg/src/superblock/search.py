"""Top-k retrieval with superblock- and block-level dynamic pruning.

A superblock X is skipped when ``mu * SBMax(X) <= theta`` and
``eta * avgSBMax(X) <= theta``; a block B is skipped when
``eta * BoundSum(B) <= theta``. With ``mu = eta = 1`` the result equals the
exhaustive top-k exactly, ties included.

mu and eta are held as exact fractions and every comparison is done by
cross-multiplying integers. At exact equality a group is only skipped if none
of its documents could win the tie-break (external id ascending) against the
current k-th entry; that keeps safe mode identical to the oracle even when
scores tie at the cut-off.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import _kernels
from .corpus import QueryVector, prune_query
from .index import BlockIndex

_MAX_DENOMINATOR = 10**6


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        frac = value
    elif isinstance(value, float):
        frac = Fraction(repr(value))
    else:
        frac = Fraction(value)
    if frac.denominator > _MAX_DENOMINATOR:
        frac = frac.limit_denominator(_MAX_DENOMINATOR)
    return frac


class LoopOrder(str, enum.Enum):
    SUPERBLOCK_AT_A_TIME = "saat"
    TERM_AT_A_TIME = "taat"

    @classmethod
    def parse(cls, value) -> "LoopOrder":
        aliases = {
            "saat": cls.SUPERBLOCK_AT_A_TIME,
            "superblock-at-a-time": cls.SUPERBLOCK_AT_A_TIME,
            "taat": cls.TERM_AT_A_TIME,
            "term-at-a-time": cls.TERM_AT_A_TIME,
        }
        if isinstance(value, cls):
            return value
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown loop order {value!r}") from None


class Mode(str, enum.Enum):
    INTERLEAVED = "interleaved"
    TWO_PHASE = "two-phase"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            raise ValueError(f"unknown search mode {value!r}") from None


@dataclass(frozen=True)
class SearchParams:
    k: int = 10
    mu: Fraction = Fraction(1)
    eta: Fraction = Fraction(1)
    beta: Fraction = Fraction(1)
    loop_order: LoopOrder = LoopOrder.SUPERBLOCK_AT_A_TIME
    mode: Mode = Mode.INTERLEAVED

    def __post_init__(self):
        set_ = lambda name, v: object.__setattr__(self, name, v)  # noqa: E731
        set_("mu", as_fraction(self.mu))
        set_("eta", as_fraction(self.eta))
        set_("beta", as_fraction(self.beta))
        set_("loop_order", LoopOrder.parse(self.loop_order))
        set_("mode", Mode.parse(self.mode))
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        check_mu_eta(self.mu, self.eta)
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def safe(self) -> bool:
        return self.mu == 1 and self.eta == 1


def check_mu_eta(mu: Fraction, eta: Fraction) -> None:
    if not 0 < mu <= eta <= 1:
        raise ValueError(f"need 0 < mu <= eta <= 1, got mu={mu}, eta={eta}")


@dataclass
class TraversalStats:
    superblocks_pruned: int = 0
    superblocks_visited: int = 0
    blocks_pruned: int = 0
    blocks_scored: int = 0
    docs_scored: int = 0

    @classmethod
    def from_array(cls, a: np.ndarray) -> "TraversalStats":
        return cls(*(int(x) for x in a))

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SuperblockBounds:
    sbmax: np.ndarray
    child_sum_score: np.ndarray  # c * avgSBMax

    def avg(self, c: int) -> list[Fraction]:
        return [Fraction(int(x), c) for x in self.child_sum_score]


@dataclass(frozen=True)
class BlockCandidate:
    block_id: int
    bound: int


class TopKAccumulator:
    """Bounded min-heap of (score, doc); ``theta`` is the k-th best score or 0."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be positive")
        self.k = k
        self.scores = np.zeros(k, np.int64)
        self.docs = np.zeros(k, np.int64)
        self.ranks = np.zeros(k, np.int64)
        self._size = np.zeros(1, np.int64)

    def __len__(self) -> int:
        return int(self._size[0])

    @property
    def full(self) -> bool:
        return len(self) == self.k

    @property
    def theta(self) -> int:
        return int(_kernels.topk_theta(self.scores, self._size, self.k))

    def offer(self, score: int, doc: int, rank: int | None = None) -> bool:
        """Admit ``doc`` if it beats the current k-th entry (zero scores never enter)."""
        return bool(
            _kernels.topk_offer(
                self.scores, self.docs, self.ranks, self._size, self.k,
                int(score), int(doc), int(doc if rank is None else rank),
            )
        )

    def entries(self) -> list[tuple[int, int]]:
        """(score, doc) pairs, best first."""
        n = len(self)
        order = np.lexsort((self.ranks[:n], -self.scores[:n]))
        return [(int(self.scores[i]), int(self.docs[i])) for i in order]


def _valid_query(index: BlockIndex, q: QueryVector) -> tuple[np.ndarray, np.ndarray]:
    # Out-of-vocabulary terms and zero weights cannot contribute to any score.
    keep = (q.terms < index.vocab_size) & (q.weights > 0)
    return q.terms[keep].astype(np.int64), q.weights[keep].astype(np.int64)


def superblock_bounds(index: BlockIndex, q: QueryVector) -> SuperblockBounds:
    terms, weights = _valid_query(index, q)
    sbmax, css = _kernels.superblock_bounds(
        terms, weights, index.superblocks.max_w, index.superblocks.child_sum
    )
    return SuperblockBounds(sbmax, css)


def superblock_prune_decision(sbmax: int, child_sum_score: int, theta: int, mu, eta, c: int) -> bool:
    """True when the superblock can be skipped (both inequalities hold, inclusive)."""
    mu, eta = as_fraction(mu), as_fraction(eta)
    check_mu_eta(mu, eta)
    if theta < 0:
        raise ValueError("theta must be non-negative")
    return bool(
        _kernels.superblock_prunable(
            int(sbmax), int(child_sum_score), int(theta),
            mu.numerator, mu.denominator, eta.numerator, eta.denominator, int(c),
            1, True, 0,
        )
    )


def block_boundsums(
    index: BlockIndex,
    q: QueryVector,
    superblock_ids: Iterable[int],
    loop_order=LoopOrder.SUPERBLOCK_AT_A_TIME,
) -> dict[int, int]:
    sb_ids = np.asarray(list(superblock_ids), dtype=np.int64)
    bounds = block_boundsums_array(index, q, sb_ids, loop_order)
    g = index.geometry
    out = {}
    for row, s in enumerate(sb_ids.tolist()):
        for x in range(min(g.c, g.N - s * g.c)):
            out[s * g.c + x] = int(bounds[row, x])
    return out


def block_boundsums_array(index: BlockIndex, q: QueryVector, sb_ids: np.ndarray, loop_order) -> np.ndarray:
    """Row per superblock, column per child slot (padding columns are 0)."""
    terms, weights = _valid_query(index, q)
    saat = LoopOrder.parse(loop_order) is LoopOrder.SUPERBLOCK_AT_A_TIME
    return _kernels.block_boundsums(
        terms, weights, index.block_max.values, np.asarray(sb_ids, np.int64), index.geometry.c, saat
    )


def _dense_query(index: BlockIndex, terms: np.ndarray, weights: np.ndarray) -> np.ndarray:
    dense = np.zeros(index.vocab_size, np.int64)
    dense[terms] = weights
    return dense


def score_block(
    index: BlockIndex, q: QueryVector, block_id: int, acc: TopKAccumulator
) -> tuple[TopKAccumulator, int]:
    terms, weights = _valid_query(index, q)
    fwd = index.forward
    scored = _kernels.score_block(
        int(block_id), _dense_query(index, terms, weights), index.geometry.b, index.num_docs,
        fwd.block_ptr, fwd.terms, fwd.term_ptr, fwd.slots, fwd.impacts,
        index.position_rank, np.zeros(index.geometry.b, np.int64),
        acc.scores, acc.docs, acc.ranks, acc._size, acc.k,
    )
    return acc, int(scored)


def search(
    index: BlockIndex, q: QueryVector, params: SearchParams | None = None
) -> tuple[list[tuple[str, int]], TraversalStats]:
    """Return ``[(external_id, score), ...]`` best first, and traversal counters."""
    params = params or SearchParams()
    if params.beta != 1 and len(q):
        q = prune_query(q, params.beta)
    terms, weights = _valid_query(index, q)
    g = index.geometry
    if terms.size == 0:
        return [], TraversalStats(superblocks_pruned=g.S)
    fwd = index.forward
    hs, hd, hr, n, stats = _kernels.search(
        terms, weights, _dense_query(index, terms, weights), params.k,
        params.mu.numerator, params.mu.denominator,
        params.eta.numerator, params.eta.denominator,
        params.loop_order is LoopOrder.SUPERBLOCK_AT_A_TIME,
        params.mode is Mode.TWO_PHASE,
        g.b, g.c, g.num_docs,
        index.block_max.values, index.superblocks.max_w, index.superblocks.child_sum,
        fwd.block_ptr, fwd.terms, fwd.term_ptr, fwd.slots, fwd.impacts,
        index.position_rank, index.block_rank, index.superblock_rank,
    )
    order = np.lexsort((hr[:n], -hs[:n]))
    ext = index.manifest.external_ids
    perm = index.ordering.permutation
    hits = [(ext[perm[hd[i]]], int(hs[i])) for i in order]
    return hits, TraversalStats.from_array(stats)
