"""Sliding-window text chunking.

Documents are split into fixed-size character windows that overlap by a
configurable amount, so facts spanning a window boundary survive in at
least one chunk. Offsets are Python string indices (Unicode code points),
so a window never splits a scalar value.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParams

DEFAULT_CHUNK_SIZE = 3000
DEFAULT_CHUNK_OVERLAP = 300


@dataclass(frozen=True)
class ChunkingParams:
    chunk_size: int = DEFAULT_CHUNK_SIZE
    chunk_overlap: int = DEFAULT_CHUNK_OVERLAP

    def validate(self) -> None:
        if self.chunk_size <= 0:
            raise InvalidParams(f"chunk_size must be positive, got {self.chunk_size}")
        if self.chunk_overlap < 0:
            raise InvalidParams(f"chunk_overlap must be non-negative, got {self.chunk_overlap}")
        if self.chunk_overlap >= self.chunk_size:
            raise InvalidParams(
                f"chunk_overlap ({self.chunk_overlap}) must be smaller than "
                f"chunk_size ({self.chunk_size})"
            )


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    ordinal: int
    start_offset: int
    end_offset: int
    text: str


def chunk_text(text: str, doc_id: str, params: ChunkingParams) -> list[Chunk]:
    """Split ``text`` into overlapping windows of ``params.chunk_size`` chars.

    Windows start every ``chunk_size - chunk_overlap`` characters. The final
    window may be shorter; iteration stops as soon as a window reaches the
    end of the text, so every character is covered exactly once per pass and
    no empty trailing window is ever produced. Empty input yields no chunks.
    """
    params.validate()
    if not text:
        return []

    stride = params.chunk_size - params.chunk_overlap
    chunks: list[Chunk] = []
    start = 0
    while True:
        end = min(start + params.chunk_size, len(text))
        ordinal = len(chunks)
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}#{ordinal}",
                doc_id=doc_id,
                ordinal=ordinal,
                start_offset=start,
                end_offset=end,
                text=text[start:end],
            )
        )
        if end >= len(text):
            break
        start += stride
    return chunks
