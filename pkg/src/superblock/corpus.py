"""Sparse-vector collections, vocabulary assignment and 8-bit impact quantization.

Documents and queries arrive as JSON lines::

    {"id": "d0", "vector": {"term": 1.25, ...}}

Document weights are quantized once, with a single global scale, to integers in
``[0, 255]``. Query weights are multiplied by a fixed factor (default 100) and
rounded, so every score in the engine is an exact integer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

LEVELS = 256
MAX_IMPACT = LEVELS - 1
DEFAULT_QUERY_SCALE = 100

# Values that land within this many quantization steps of a .5 boundary round
# up; absorbs float error in raw/scale so that e.g. 1.6 / (3.2/255) -> 128.
_HALF_STEP_SLACK = 1e-9


class CollectionParseError(ValueError):
    """A record in a sparse-vector stream could not be accepted."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class QuantizationParams:
    scale: float
    levels: int = LEVELS

    def __post_init__(self):
        if not self.scale > 0 or not math.isfinite(self.scale):
            raise ValueError(f"quantization scale must be positive, got {self.scale}")
        if self.levels != LEVELS:
            raise ValueError(f"only {LEVELS} levels are supported")

    @classmethod
    def from_max_weight(cls, max_weight: float) -> "QuantizationParams":
        # An all-zero corpus still needs a usable scale.
        if max_weight <= 0:
            return cls(scale=1.0)
        return cls(scale=max_weight / MAX_IMPACT)

    @property
    def max_weight(self) -> float:
        return self.scale * MAX_IMPACT


def _quantize_array(raw: np.ndarray, scale: float) -> np.ndarray:
    levels = np.floor(raw / scale + (0.5 + _HALF_STEP_SLACK))
    return np.clip(levels, 0, MAX_IMPACT).astype(np.uint8)


def quantize(raw_weight: float, params: QuantizationParams) -> int:
    """Map a raw document weight to its 8-bit impact (round half up)."""
    if raw_weight < 0 or math.isnan(raw_weight):
        raise ValueError(f"negative weight {raw_weight}")
    if raw_weight > params.max_weight * (1 + 1e-12):
        raise ValueError(
            f"weight {raw_weight} exceeds the global maximum {params.max_weight}; "
            "quantization params are stale"
        )
    return int(_quantize_array(np.float64(raw_weight), params.scale))


def _check_sorted_unique(terms: np.ndarray, what: str) -> None:
    if terms.size and (np.any(terms < 0) or np.any(np.diff(terms) <= 0)):
        raise ValueError(f"{what} terms must be non-negative and strictly increasing")


class QuantizedVector:
    """Sorted (term, impact) pairs of one document; zero impacts are never stored."""

    __slots__ = ("terms", "impacts")

    def __init__(self, terms, impacts):
        self.terms = np.asarray(terms, dtype=np.int64)
        self.impacts = np.asarray(impacts, dtype=np.int64)
        if self.terms.shape != self.impacts.shape or self.terms.ndim != 1:
            raise ValueError("terms and impacts must be 1-d arrays of equal length")
        _check_sorted_unique(self.terms, "document")
        if self.impacts.size and (self.impacts.min() < 1 or self.impacts.max() > MAX_IMPACT):
            raise ValueError("impacts must lie in [1, 255]")

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, int]]) -> "QuantizedVector":
        entries = list(entries)
        return cls([t for t, _ in entries], [w for _, w in entries])

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.terms.tolist(), self.impacts.tolist()))

    def __len__(self) -> int:
        return int(self.terms.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantizedVector):
            return NotImplemented
        return np.array_equal(self.terms, other.terms) and np.array_equal(
            self.impacts, other.impacts
        )

    def __repr__(self) -> str:
        return f"QuantizedVector({self.entries!r})"


class QueryVector:
    """Sorted (term, integer weight) pairs of one query."""

    __slots__ = ("terms", "weights")

    def __init__(self, terms, weights):
        self.terms = np.asarray(terms, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.int64)
        if self.terms.shape != self.weights.shape or self.terms.ndim != 1:
            raise ValueError("terms and weights must be 1-d arrays of equal length")
        _check_sorted_unique(self.terms, "query")
        if self.weights.size and self.weights.min() < 0:
            raise ValueError("query weights must be non-negative")

    @classmethod
    def from_entries(cls, entries) -> "QueryVector":
        if isinstance(entries, dict):
            entries = entries.items()
        entries = sorted(entries)
        return cls([t for t, _ in entries], [w for _, w in entries])

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(zip(self.terms.tolist(), self.weights.tolist()))

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())

    def __len__(self) -> int:
        return int(self.terms.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueryVector):
            return NotImplemented
        return np.array_equal(self.terms, other.terms) and np.array_equal(
            self.weights, other.weights
        )

    def __repr__(self) -> str:
        return f"QueryVector({self.entries!r})"


@dataclass
class CorpusManifest:
    num_docs: int
    vocab_size: int
    external_ids: list[str]
    quantization: QuantizationParams

    def __post_init__(self):
        if len(self.external_ids) != self.num_docs:
            raise ValueError("external_ids must have exactly num_docs entries")
        if len(set(self.external_ids)) != self.num_docs:
            raise ValueError("external ids must be distinct")


@dataclass
class RawVector:
    terms: np.ndarray
    weights: np.ndarray

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.terms.tolist(), self.weights.tolist()))


@dataclass
class ParsedCollection:
    """Output of :func:`parse_collection`: unquantized vectors plus vocabulary."""

    manifest: CorpusManifest
    vocab: list[str]
    vectors: list[RawVector]

    def __iter__(self):
        # Allows ``manifest, vectors = parse_collection(...)``.
        return iter((self.manifest, self.vectors))


def _records(stream: IO[str] | Iterable[str]) -> Iterator[tuple[int, str, dict]]:
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CollectionParseError(f"malformed record ({exc.msg})", lineno) from None
        if (
            not isinstance(record, dict)
            or not isinstance(record.get("id"), str)
            or not isinstance(record.get("vector"), dict)
        ):
            raise CollectionParseError(
                'expected {"id": string, "vector": {term: weight}}', lineno
            )
        yield lineno, record["id"], record["vector"]


def _weight(value, lineno: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CollectionParseError(f"weight {value!r} is not a number", lineno)
    value = float(value)
    if not math.isfinite(value):
        raise CollectionParseError(f"weight {value!r} is not finite", lineno)
    if value < 0:
        raise CollectionParseError(f"negative weight {value}", lineno)
    return value


def parse_collection(stream: IO[str] | Iterable[str]) -> ParsedCollection:
    """Read document records, assigning term ids in first-seen order."""
    vocab: dict[str, int] = {}
    ids: list[str] = []
    seen: set[str] = set()
    vectors: list[RawVector] = []
    max_weight = 0.0
    for lineno, doc_id, vector in _records(stream):
        if doc_id in seen:
            raise CollectionParseError(f"duplicate document id {doc_id!r}", lineno)
        seen.add(doc_id)
        ids.append(doc_id)
        pairs = []
        for term, value in vector.items():
            w = _weight(value, lineno)
            pairs.append((vocab.setdefault(term, len(vocab)), w))
            max_weight = max(max_weight, w)
        pairs.sort()
        vectors.append(
            RawVector(
                np.array([t for t, _ in pairs], dtype=np.int64),
                np.array([w for _, w in pairs], dtype=np.float64),
            )
        )
    manifest = CorpusManifest(
        num_docs=len(ids),
        vocab_size=len(vocab),
        external_ids=ids,
        quantization=QuantizationParams.from_max_weight(max_weight),
    )
    return ParsedCollection(manifest, list(vocab), vectors)


@dataclass(eq=False)
class Corpus:
    """Quantized documents in CSR layout (``doc_ptr`` / ``terms`` / ``impacts``)."""

    manifest: CorpusManifest
    vocab: list[str]
    doc_ptr: np.ndarray
    terms: np.ndarray
    impacts: np.ndarray
    _term_ids: dict[str, int] | None = field(default=None, repr=False)

    @property
    def num_docs(self) -> int:
        return self.manifest.num_docs

    @property
    def vocab_size(self) -> int:
        return self.manifest.vocab_size

    @property
    def external_ids(self) -> list[str]:
        return self.manifest.external_ids

    @property
    def term_ids(self) -> dict[str, int]:
        if self._term_ids is None:
            self._term_ids = {t: i for i, t in enumerate(self.vocab)}
        return self._term_ids

    def __len__(self) -> int:
        return self.num_docs

    def doc(self, i: int) -> QuantizedVector:
        lo, hi = self.doc_ptr[i], self.doc_ptr[i + 1]
        return QuantizedVector(self.terms[lo:hi], self.impacts[lo:hi])

    def __iter__(self) -> Iterator[QuantizedVector]:
        return (self.doc(i) for i in range(self.num_docs))

    @classmethod
    def from_raw(
        cls,
        external_ids: Sequence[str],
        vocab: Sequence[str],
        vectors: Sequence[RawVector],
        quantization: QuantizationParams | None = None,
    ) -> "Corpus":
        lengths = np.array([len(v.terms) for v in vectors], dtype=np.int64)
        if vectors:
            terms = np.concatenate([v.terms for v in vectors]).astype(np.int64)
            weights = np.concatenate([v.weights for v in vectors]).astype(np.float64)
        else:
            terms = np.zeros(0, np.int64)
            weights = np.zeros(0, np.float64)
        if weights.size and weights.min() < 0:
            raise ValueError("negative weight")
        if quantization is None:
            quantization = QuantizationParams.from_max_weight(
                float(weights.max()) if weights.size else 0.0
            )
        elif weights.size and weights.max() > quantization.max_weight * (1 + 1e-12):
            raise ValueError("weight exceeds the global maximum; quantization params are stale")
        impacts = _quantize_array(weights, quantization.scale)
        keep = impacts > 0
        owner = np.repeat(np.arange(len(vectors)), lengths)[keep]
        doc_ptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum(np.bincount(owner, minlength=len(vectors)), out=doc_ptr[1:])
        manifest = CorpusManifest(
            num_docs=len(vectors),
            vocab_size=len(vocab),
            external_ids=list(external_ids),
            quantization=quantization,
        )
        corpus = cls(manifest, list(vocab), doc_ptr, terms[keep].astype(np.int32), impacts[keep])
        if terms.size and terms.max() >= len(vocab):
            raise ValueError("term id outside the vocabulary")
        return corpus

    @classmethod
    def from_parsed(cls, parsed: ParsedCollection) -> "Corpus":
        return cls.from_raw(
            parsed.manifest.external_ids,
            parsed.vocab,
            parsed.vectors,
            parsed.manifest.quantization,
        )


def load_corpus(path: str | Path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return Corpus.from_parsed(parse_collection(fh))


def scale_query_weight(weight: float, scale: int = DEFAULT_QUERY_SCALE) -> int:
    # Round half up, same convention as document quantization.
    return int(math.floor(weight * scale + 0.5 + _HALF_STEP_SLACK))


def parse_queries(
    stream: IO[str] | Iterable[str],
    term_ids: dict[str, int],
    scale: int = DEFAULT_QUERY_SCALE,
) -> list[tuple[str, QueryVector]]:
    """Read query records against an existing vocabulary.

    Terms missing from the vocabulary cannot match any document and are
    dropped, as are weights that round to zero.
    """
    out = []
    seen: set[str] = set()
    for lineno, qid, vector in _records(stream):
        if qid in seen:
            raise CollectionParseError(f"duplicate query id {qid!r}", lineno)
        seen.add(qid)
        entries = {}
        for term, value in vector.items():
            q = scale_query_weight(_weight(value, lineno), scale)
            tid = term_ids.get(term)
            if tid is not None and q > 0:
                entries[tid] = q
        out.append((qid, QueryVector.from_entries(entries)))
    return out


def load_queries(
    path: str | Path, term_ids: dict[str, int], scale: int = DEFAULT_QUERY_SCALE
) -> list[tuple[str, QueryVector]]:
    with open(path, encoding="utf-8") as fh:
        return parse_queries(fh, term_ids, scale)


def prune_query(q: QueryVector, beta) -> QueryVector:
    """Keep the heaviest query terms until they carry ``beta`` of the total weight.

    Terms are ranked by decreasing weight, ties by ascending term id, and the
    shortest prefix whose weight reaches ``beta * total`` is kept.
    """
    beta = Fraction(str(beta)) if isinstance(beta, float) else Fraction(beta)
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if beta == 1 or len(q) == 0:
        return q
    order = np.lexsort((q.terms, -q.weights))
    need = beta * q.total_weight
    cum = 0
    kept = []
    for i in order.tolist():
        kept.append(i)
        cum += int(q.weights[i])
        if cum >= need:
            break
    kept.sort()
    return QueryVector(q.terms[kept], q.weights[kept])


def read_qrels(stream: IO[str] | Iterable[str]) -> dict[str, dict[str, int]]:
    """Parse ``query_id<TAB>doc_id<TAB>grade`` lines (4-column TREC qrels also accepted)."""
    qrels: dict[str, dict[str, int]] = {}
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) == 4:
            parts = [parts[0], parts[2], parts[3]]
        if len(parts) != 3:
            raise CollectionParseError("expected query_id, doc_id, grade", lineno)
        try:
            grade = int(parts[2])
        except ValueError:
            raise CollectionParseError(f"grade {parts[2]!r} is not an integer", lineno) from None
        if grade < 0:
            raise CollectionParseError("relevance grades must be non-negative", lineno)
        qrels.setdefault(parts[0], {})[parts[1]] = grade
    return qrels


def load_qrels(path: str | Path) -> dict[str, dict[str, int]]:
    with open(path, encoding="utf-8") as fh:
        return read_qrels(fh)


def write_qrels(qrels: dict[str, dict[str, int]], fh: IO[str]) -> None:
    for qid, docs in qrels.items():
        for doc_id, grade in docs.items():
            fh.write(f"{qid}\t{doc_id}\t{grade}\n")
