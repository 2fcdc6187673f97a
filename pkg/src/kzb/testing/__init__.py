"""In-process HTTP doubles for the two external services.

These let the whole pipeline run offline: a Zotero lookalike serving a small
library from memory, and an OpenAI-compatible endpoint backed by the
deterministic mock embedder and canned chat stub.
"""

from .mock_openai import MockOpenAIServer, MockOpenAIState
from .mock_zotero import MockZoteroServer, MockZoteroState

__all__ = [
    "MockZoteroServer",
    "MockZoteroState",
    "MockOpenAIServer",
    "MockOpenAIState",
]
