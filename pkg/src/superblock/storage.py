"""Binary index file.

Little-endian layout::

    "SBPI" | u32 version | u64 b, c, N, S, num_docs, vocab_size | f64 scale
    block-max table      u8[vocab * N]                 (term-major)
    superblock table     u8[vocab * S], u16[vocab * S]  (max, child sum)
    forward index        u64 G, u64 P, u64[N+1] block_ptr, u32[G] terms,
                         u64[G+1] term_ptr, u32[P] slots, u8[P] impacts
    manifest             u64[num_docs] ordering, num_docs x (u32 len, utf-8 id),
                         vocab x (u32 len, utf-8 term)
    u32 CRC32 of every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .corpus import CorpusManifest, QuantizationParams
from .index import (
    BlockIndex,
    BlockMaxTable,
    DocOrdering,
    ForwardBlockIndex,
    PartitionGeometry,
    SuperblockTable,
)

MAGIC = b"SBPI"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sI6Qd")


class IndexFormatError(ValueError):
    pass


class TruncatedIndexError(IndexFormatError):
    pass


class ChecksumError(IndexFormatError):
    pass


def _strings(values: list[str]) -> bytes:
    parts = []
    for v in values:
        raw = v.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    return b"".join(parts)


def serialize_index(index: BlockIndex) -> bytes:
    g = index.geometry
    fwd = index.forward
    V = index.vocab_size
    body = [
        _HEADER.pack(
            MAGIC, FORMAT_VERSION, g.b, g.c, g.N, g.S, g.num_docs, V,
            index.manifest.quantization.scale,
        ),
        index.block_max.values.astype("<u1", copy=False).tobytes(),
        index.superblocks.max_w.astype("<u1", copy=False).tobytes(),
        index.superblocks.child_sum.astype("<u2", copy=False).tobytes(),
        struct.pack("<QQ", fwd.terms.size, fwd.slots.size),
        fwd.block_ptr.astype("<u8").tobytes(),
        fwd.terms.astype("<u4").tobytes(),
        fwd.term_ptr.astype("<u8").tobytes(),
        fwd.slots.astype("<u4").tobytes(),
        fwd.impacts.astype("<u1").tobytes(),
        index.ordering.permutation.astype("<u8").tobytes(),
        _strings(index.manifest.external_ids),
        _strings(index.vocab),
    ]
    data = b"".join(body)
    return data + struct.pack("<I", zlib.crc32(data))


def save_index(index: BlockIndex, path: str | Path) -> None:
    Path(path).write_bytes(serialize_index(index))


class _Reader:
    def __init__(self, data: bytes, end: int):
        self.data = data
        self.pos = 0
        self.end = end

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > self.end:
            raise TruncatedIndexError("index file is truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def array(self, dtype: str, count: int, native) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt).astype(native)

    def strings(self, count: int) -> list[str]:
        out = []
        for _ in range(count):
            (n,) = struct.unpack("<I", self.take(4))
            out.append(self.take(n).decode("utf-8"))
        return out


def deserialize_index(data: bytes) -> BlockIndex:
    if len(data) < 4 or data[:4] != MAGIC:
        raise IndexFormatError("bad magic bytes; not an index file")
    if len(data) < _HEADER.size + 4:
        raise TruncatedIndexError("index file is truncated")
    _, version, b, c, N, S, num_docs, V, scale = _HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {version}")
    r = _Reader(data, len(data) - 4)
    r.pos = _HEADER.size
    block_max = r.array("<u1", V * N, np.uint8).reshape(V, N)
    sb_max = r.array("<u1", V * S, np.uint8).reshape(V, S)
    sb_sum = r.array("<u2", V * S, np.uint16).reshape(V, S)
    G, P = struct.unpack("<QQ", r.take(16))
    forward = ForwardBlockIndex(
        block_ptr=r.array("<u8", N + 1, np.int64),
        terms=r.array("<u4", G, np.int32),
        term_ptr=r.array("<u8", G + 1, np.int64),
        slots=r.array("<u4", P, np.uint32),
        impacts=r.array("<u1", P, np.uint8),
    )
    perm = r.array("<u8", num_docs, np.int64)
    external_ids = r.strings(num_docs)
    vocab = r.strings(V)
    if r.pos != r.end:
        raise IndexFormatError("trailing bytes before checksum")
    (stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != stored:
        raise ChecksumError("CRC32 mismatch; index file is corrupt")
    geom = PartitionGeometry(b=b, c=c, N=N, S=S, num_docs=num_docs)
    if geom != PartitionGeometry.for_corpus(num_docs, b, c):
        raise IndexFormatError("inconsistent partition geometry")
    manifest = CorpusManifest(
        num_docs=num_docs,
        vocab_size=V,
        external_ids=external_ids,
        quantization=QuantizationParams(scale=scale),
    )
    return BlockIndex(
        geometry=geom,
        block_max=BlockMaxTable(block_max),
        superblocks=SuperblockTable(sb_max, sb_sum),
        forward=forward,
        manifest=manifest,
        vocab=vocab,
        ordering=DocOrdering(perm),
    )


def load_index(path: str | Path) -> BlockIndex:
    return deserialize_index(Path(path).read_bytes())
