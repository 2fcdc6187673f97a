"""Persisted exact-cosine vector index with exhaustive top-k search.

Brute force on purpose: a personal reference library yields 10^2..10^4
chunks, where a full scan is a single matmul and results are exactly
checkable against a naive oracle. Scores are computed in float64 over the
float32 stored vectors.

Index file layout (little-endian throughout):
    magic  ``KZBVEC1\\0``
    u32    format version (1)
    u32    dimension
    u64    record count
    per record:
        u16-length-prefixed UTF-8 chunk_id
        u16-length-prefixed UTF-8 doc_id
        u32 start_offset, u32 end_offset
        u32-length-prefixed UTF-8 text
        dimension x IEEE-754 float32
    u32    CRC-32 of all preceding bytes
"""

from __future__ import annotations

import os
import struct
import threading
import zlib
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingVector
from .errors import (
    CorruptIndex,
    DimensionMismatch,
    EmptyIndex,
    IoError,
    VersionMismatch,
    ZeroVector,
)

MAGIC = b"KZBVEC1\x00"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<IIQ")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class VectorRecord:
    chunk_id: str
    doc_id: str
    start_offset: int
    end_offset: int
    text: str
    vector: EmbeddingVector
    norm: float = field(init=False)

    def __post_init__(self) -> None:
        # precomputed once so search never re-derives it
        object.__setattr__(
            self, "norm", float(np.linalg.norm(self.vector.values.astype(np.float64)))
        )


@dataclass(frozen=True)
class SearchHit:
    chunk_id: str
    doc_id: str
    score: float
    text: str


class VectorIndex:
    """Exact top-k cosine index; many concurrent readers or one writer."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._records: dict[str, VectorRecord] = {}
        self._dimension: int | None = None
        self._snapshot: tuple | None = None  # (ids, records, matrix64, norms64)

    @property
    def size(self) -> int:
        return len(self._records)

    @property
    def dimension(self) -> int | None:
        return self._dimension

    def upsert(self, records: list[VectorRecord]) -> int:
        """Insert records, replacing any with an already-present chunk_id.

        The first record ever inserted pins the index dimension.
        """
        with self._lock:
            for record in records:
                dim = record.vector.dimension
                if self._dimension is None:
                    self._dimension = dim
                elif dim != self._dimension:
                    raise DimensionMismatch(
                        f"record {record.chunk_id!r} has dimension {dim}, "
                        f"index is {self._dimension}"
                    )
                if record.norm == 0.0:
                    raise ZeroVector(f"record {record.chunk_id!r} has an all-zero vector")
            for record in records:
                self._records[record.chunk_id] = record
            self._snapshot = None
        return len(records)

    def _read_snapshot(self) -> tuple:
        with self._lock:
            if self._snapshot is None:
                records = tuple(self._records.values())
                ids = tuple(r.chunk_id for r in records)
                if records:
                    matrix = np.stack([r.vector.values for r in records]).astype(np.float64)
                    norms = np.array([r.norm for r in records], dtype=np.float64)
                else:
                    matrix = np.zeros((0, 0), dtype=np.float64)
                    norms = np.zeros(0, dtype=np.float64)
                self._snapshot = (ids, records, matrix, norms)
            return self._snapshot

    def search(self, query: EmbeddingVector, k: int) -> list[SearchHit]:
        """Exhaustive exact scan; hits sorted by score desc, chunk_id asc."""
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        ids, records, matrix, norms = self._read_snapshot()
        if not records:
            raise EmptyIndex("search on an empty index")
        if query.dimension != self._dimension:
            raise DimensionMismatch(
                f"query dimension {query.dimension} does not match index {self._dimension}"
            )
        q = query.values.astype(np.float64)
        q_norm = float(np.linalg.norm(q))
        if q_norm == 0.0:
            raise ZeroVector("query vector is all-zero")

        scores = matrix @ q / (norms * q_norm)
        np.clip(scores, -1.0, 1.0, out=scores)
        order = sorted(range(len(records)), key=lambda i: (-scores[i], ids[i]))[:k]
        return [
            SearchHit(
                chunk_id=records[i].chunk_id,
                doc_id=records[i].doc_id,
                score=float(scores[i]),
                text=records[i].text,
            )
            for i in order
        ]

    # --- persistence ---

    def persist(self, path) -> None:
        """Write the index atomically (tmp file + rename)."""
        with self._lock:
            records = list(self._records.values())
            dimension = self._dimension or 0

        buf = bytearray(MAGIC)
        buf += _HEADER.pack(FORMAT_VERSION, dimension, len(records))
        for r in records:
            buf += _prefixed(_U16, r.chunk_id.encode("utf-8"))
            buf += _prefixed(_U16, r.doc_id.encode("utf-8"))
            buf += _U32.pack(r.start_offset) + _U32.pack(r.end_offset)
            buf += _prefixed(_U32, r.text.encode("utf-8"))
            buf += r.vector.values.astype("<f4").tobytes()
        buf += _U32.pack(zlib.crc32(bytes(buf)) & 0xFFFFFFFF)

        tmp = f"{path}.tmp"
        try:
            with open(tmp, "wb") as fh:
                fh.write(buf)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise IoError(f"cannot write index file: {exc}") from exc

    @classmethod
    def load(cls, path) -> "VectorIndex":
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read index file: {exc}") from exc

        minimum = len(MAGIC) + _HEADER.size + _U32.size
        if len(data) < minimum:
            raise CorruptIndex(f"index file is truncated ({len(data)} bytes)")
        if data[: len(MAGIC)] != MAGIC:
            raise CorruptIndex("bad magic bytes")
        version, dimension, count = _HEADER.unpack_from(data, len(MAGIC))
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"index format version {version}, expected {FORMAT_VERSION}")
        (stored_crc,) = _U32.unpack_from(data, len(data) - _U32.size)
        if zlib.crc32(data[: -_U32.size]) & 0xFFFFFFFF != stored_crc:
            raise CorruptIndex("checksum mismatch")

        reader = _Reader(data[: -_U32.size], len(MAGIC) + _HEADER.size)
        index = cls()
        records = []
        for _ in range(count):
            chunk_id = reader.take(reader.u16()).decode("utf-8")
            doc_id = reader.take(reader.u16()).decode("utf-8")
            start_offset = reader.u32()
            end_offset = reader.u32()
            text = reader.take(reader.u32()).decode("utf-8")
            raw = reader.take(dimension * 4)
            vector = EmbeddingVector(np.frombuffer(raw, dtype="<f4").copy())
            records.append(
                VectorRecord(
                    chunk_id=chunk_id,
                    doc_id=doc_id,
                    start_offset=start_offset,
                    end_offset=end_offset,
                    text=text,
                    vector=vector,
                )
            )
        if reader.remaining():
            raise CorruptIndex(f"{reader.remaining()} trailing bytes after records")
        if records:
            index.upsert(records)
            index._dimension = dimension
        return index


class _Reader:
    """Cursor over bytes that raises CorruptIndex on any overrun."""

    def __init__(self, data: bytes, offset: int) -> None:
        self._data = data
        self._pos = offset

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise CorruptIndex("record data is truncated")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def u16(self) -> int:
        return _U16.unpack(self.take(2))[0]

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def remaining(self) -> int:
        return len(self._data) - self._pos


def _prefixed(prefix: struct.Struct, payload: bytes) -> bytes:
    limit = 0xFFFF if prefix is _U16 else 0xFFFFFFFF
    if len(payload) > limit:
        raise ValueError(f"field of {len(payload)} bytes exceeds format limit {limit}")
    return prefix.pack(len(payload)) + payload
