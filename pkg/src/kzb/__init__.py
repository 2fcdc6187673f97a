"""Question answering over a Zotero reference library.

Ingests the library's PDF attachments, builds a persisted vector index of
overlapping text chunks, and answers questions with chat-model responses
grounded strictly in retrieved passages — refusing outright when the
library holds nothing relevant. Ships as a Python API, a CLI (``kzb``),
and a local HTTP service consumed by the bundled web UI.
"""

from .chunking import Chunk, ChunkingParams, chunk_text
from .config import AppConfig, load_config, save_config
from .embeddings import (
    EmbeddingVector,
    ProviderConfig,
    cosine_similarity,
    embed_batch,
    mock_embed,
)
from .errors import KzbError
from .ingest import IngestJob, IngestStatus, run_ingest
from .pdf import ExtractedDocument, extract_document, extract_plain_text, extract_text
from .prompts import REFUSAL_SENTENCE, default_system_message
from .rag import Answer, RagParams, answer_question, build_prompt
from .sessions import ChatTurn, Session, SessionStore
from .vectorstore import SearchHit, VectorIndex, VectorRecord
from .zotero import ItemRecord, LibraryDescriptor, ZoteroClient, build_items_url

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AppConfig",
    "Chunk",
    "ChunkingParams",
    "ChatTurn",
    "EmbeddingVector",
    "ExtractedDocument",
    "IngestJob",
    "IngestStatus",
    "ItemRecord",
    "KzbError",
    "LibraryDescriptor",
    "ProviderConfig",
    "RagParams",
    "REFUSAL_SENTENCE",
    "SearchHit",
    "Session",
    "SessionStore",
    "VectorIndex",
    "VectorRecord",
    "ZoteroClient",
    "answer_question",
    "build_items_url",
    "build_prompt",
    "chunk_text",
    "cosine_similarity",
    "default_system_message",
    "embed_batch",
    "extract_document",
    "extract_plain_text",
    "extract_text",
    "load_config",
    "mock_embed",
    "run_ingest",
    "save_config",
    "__version__",
]
