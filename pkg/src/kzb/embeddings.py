"""Embedding vectors: remote provider client, offline mock, similarity kernel.

The remote client speaks the common ``POST {endpoint}/embeddings`` wire shape
(``{"model", "input": [...]}`` with bearer-token auth). The mock is a
deterministic hashed bag-of-words embedding so the whole pipeline runs
offline: texts sharing more words land closer in cosine space, which is all
the retrieval tests need.
"""

from __future__ import annotations

import hashlib
import logging
import re
import time
from dataclasses import dataclass

import numpy as np
import requests

from .errors import AuthFailed, DimensionMismatch, ProviderError, RateLimited, ZeroVector

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://api.openai.com/v1"
DEFAULT_EMBEDDING_MODEL = "text-embedding-ada-002"
DEFAULT_CHAT_MODEL = "gpt-4"
MOCK_DIMENSION = 64
MAX_BATCH_SIZE = 100
MAX_RETRIES = 3

_WORD_RE = re.compile(r"\w+")


class EmbeddingVector:
    """A fixed-dimension float32 vector. Values must be finite."""

    __slots__ = ("values",)

    def __init__(self, values) -> None:
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("embedding must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding contains NaN or infinite values")
        self.values = arr

    @property
    def dimension(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, EmbeddingVector) and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dimension})"


@dataclass
class ProviderConfig:
    """Connection settings for the embedding + chat provider.

    ``mode="mock"`` swaps both models for deterministic local stand-ins;
    no network traffic happens in that mode.
    """

    endpoint_url: str = DEFAULT_ENDPOINT
    api_key: str = ""
    embedding_model: str = DEFAULT_EMBEDDING_MODEL
    chat_model: str = DEFAULT_CHAT_MODEL
    request_timeout: float = 30.0
    mode: str = "live"
    mock_dimension: int = MOCK_DIMENSION
    retry_base_delay: float = 1.0

    def validate(self) -> None:
        if self.mode not in ("live", "mock"):
            raise ValueError(f"mode must be 'live' or 'mock', got {self.mode!r}")
        if self.mode == "live" and not self.api_key:
            raise AuthFailed("live provider mode requires a non-empty API key")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")


def mock_embed(text: str, dimension: int = MOCK_DIMENSION) -> EmbeddingVector:
    """Deterministic offline embedding: hashed bag of words, L2-normalized.

    Each lowercase word token is hashed with blake2b (stable across runs and
    processes, unlike ``hash()``) and counted into a fixed-size histogram.
    Text with no word tokens maps to the unit vector e0 so the result is
    never all-zero.
    """
    if dimension < 2:
        raise ValueError(f"mock embedding dimension must be >= 2, got {dimension}")
    counts = np.zeros(dimension, dtype=np.float64)
    for word in _WORD_RE.findall(text.lower()):
        digest = hashlib.blake2b(word.encode("utf-8"), digest_size=8).digest()
        counts[int.from_bytes(digest, "little") % dimension] += 1.0
    norm = float(np.linalg.norm(counts))
    if norm == 0.0:
        counts[0] = 1.0
        norm = 1.0
    return EmbeddingVector((counts / norm).astype(np.float32))


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Accumulates in float64 even though storage is float32.
    """
    if a.dimension != b.dimension:
        raise DimensionMismatch(f"vector dimensions differ: {a.dimension} vs {b.dimension}")
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    norm_a = float(np.linalg.norm(av))
    norm_b = float(np.linalg.norm(bv))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for an all-zero vector")
    return float(np.clip(float(np.dot(av, bv)) / (norm_a * norm_b), -1.0, 1.0))


def embed_batch(texts: list[str], cfg: ProviderConfig) -> list[EmbeddingVector]:
    """Embed ``texts``, preserving order index-for-index.

    Batches larger than ``MAX_BATCH_SIZE`` are split transparently. All
    returned vectors must share one dimension (taken from the provider
    response, never hardcoded).
    """
    if not texts:
        raise ValueError("texts must be non-empty")
    if any(not t for t in texts):
        raise ValueError("texts must not contain empty strings")

    if cfg.mode == "mock":
        return [mock_embed(t, cfg.mock_dimension) for t in texts]

    cfg.validate()
    vectors: list[EmbeddingVector] = []
    for i in range(0, len(texts), MAX_BATCH_SIZE):
        vectors.extend(_embed_remote(texts[i : i + MAX_BATCH_SIZE], cfg))
    dimensions = {v.dimension for v in vectors}
    if len(dimensions) > 1:
        raise DimensionMismatch(f"provider returned mixed dimensions {sorted(dimensions)}")
    return vectors


def _embed_remote(texts: list[str], cfg: ProviderConfig) -> list[EmbeddingVector]:
    payload = {"model": cfg.embedding_model, "input": texts}
    body = post_with_retry(f"{cfg.endpoint_url.rstrip('/')}/embeddings", payload, cfg)
    try:
        data = body["data"]
        indexed = {int(entry["index"]): entry["embedding"] for entry in data}
        ordered = [indexed[i] for i in range(len(texts))]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProviderError(f"malformed embeddings response: {exc}") from exc
    if len(ordered) != len(texts):
        raise ProviderError(
            f"provider returned {len(ordered)} embeddings for {len(texts)} inputs"
        )
    try:
        return [EmbeddingVector(values) for values in ordered]
    except ValueError as exc:
        raise ProviderError(f"invalid embedding payload: {exc}") from exc


def post_with_retry(url: str, payload: dict, cfg: ProviderConfig, sleep=time.sleep) -> dict:
    """POST JSON with bearer auth; retry 429/5xx with exponential backoff."""
    headers = {"Authorization": f"Bearer {cfg.api_key}"}
    for attempt in range(MAX_RETRIES + 1):
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=cfg.request_timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"provider request failed: {exc.__class__.__name__}") from exc

        if resp.status_code == 200:
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderError("provider returned non-JSON body") from exc
        if resp.status_code in (401, 403):
            raise AuthFailed(f"provider rejected the API key (HTTP {resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            if attempt < MAX_RETRIES:
                delay = _retry_delay(resp.headers.get("Retry-After"), attempt, cfg)
                logger.warning("provider HTTP %s, retrying in %.1fs", resp.status_code, delay)
                sleep(delay)
                continue
            if resp.status_code == 429:
                raise RateLimited("provider rate limit persisted after retries")
            raise ProviderError(f"provider server error (HTTP {resp.status_code})")
        raise ProviderError(f"unexpected provider status {resp.status_code}")
    raise ProviderError("unreachable")  # pragma: no cover


def _retry_delay(retry_after: str | None, attempt: int, cfg: ProviderConfig) -> float:
    if retry_after is not None:
        try:
            return max(0.0, float(retry_after))
        except ValueError:
            pass
    return cfg.retry_base_delay * (2**attempt)
