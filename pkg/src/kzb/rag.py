"""Retrieval-augmented answering over the vector index.

Pipeline per question: embed, top-k search, refuse early when the best
score sits under the similarity floor (no chat call happens on that path),
otherwise assemble the grounded prompt and ask the chat model. The floor
gives a provider-independent refusal; set it to 0 to lean purely on the
system message.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable

from .canned import canned_completion
from .embeddings import ProviderConfig, embed_batch, post_with_retry
from .errors import EmptyContext, InvalidParams, ProviderError
from .prompts import DEFAULT_SYSTEM_MESSAGE, REFUSAL_SENTENCE, default_system_message
from .sessions import ChatTurn, Session
from .vectorstore import SearchHit, VectorIndex

__all__ = [
    "RagParams",
    "Answer",
    "default_system_message",
    "build_prompt",
    "answer_question",
    "chat_completion",
    "REFUSAL_SENTENCE",
]

logger = logging.getLogger(__name__)


@dataclass
class RagParams:
    top_k: int = 5
    similarity_floor: float = 0.25
    max_history_turns: int = 10
    system_message: str = DEFAULT_SYSTEM_MESSAGE
    chat_model: str = ""  # empty -> use the provider config's model

    def validate(self) -> None:
        if self.top_k < 1:
            raise InvalidParams(f"top_k must be >= 1, got {self.top_k}")
        if not 0.0 <= self.similarity_floor <= 1.0:
            raise InvalidParams(f"similarity_floor must be in [0, 1], got {self.similarity_floor}")
        if self.max_history_turns < 0:
            raise InvalidParams(f"max_history_turns must be >= 0, got {self.max_history_turns}")


@dataclass(frozen=True)
class Answer:
    text: str
    citations: tuple[SearchHit, ...]
    refused: bool
    question: str
    created_at: str

    def as_dict(self) -> dict:
        return {
            "text": self.text,
            "citations": [
                {"chunk_id": h.chunk_id, "doc_id": h.doc_id, "score": h.score, "text": h.text}
                for h in self.citations
            ],
            "refused": self.refused,
            "question": self.question,
            "created_at": self.created_at,
        }


def build_prompt(
    question: str,
    hits: list[SearchHit],
    history: list[ChatTurn],
    params: RagParams,
) -> list[dict]:
    """Assemble the message list: system, bounded history, context + question."""
    if not hits:
        raise EmptyContext("cannot build a grounded prompt without retrieved chunks")
    messages = [{"role": "system", "content": params.system_message}]
    recent = history[-params.max_history_turns :] if params.max_history_turns > 0 else []
    for turn in recent:
        messages.append({"role": turn.role, "content": turn.content})
    context = "\n\n".join(f"[source: {hit.chunk_id}]\n{hit.text}" for hit in hits)
    messages.append({"role": "user", "content": f"{context}\n\nQuestion: {question}"})
    return messages


def answer_question(
    question: str,
    session: Session | None,
    params: RagParams,
    index: VectorIndex,
    providers: ProviderConfig,
    *,
    now: Callable[[], datetime] | None = None,
) -> Answer:
    """Answer one question; the caller persists the resulting turn pair."""
    if not question or not question.strip():
        raise InvalidParams("question must be non-empty")
    params.validate()
    created_at = _timestamp(now)

    query_vector = embed_batch([question], providers)[0]
    hits = index.search(query_vector, params.top_k)

    if hits[0].score < params.similarity_floor:
        logger.debug("best score %.3f under floor %.3f; refusing", hits[0].score, params.similarity_floor)
        return _refused(question, created_at)

    history = session.turns if session is not None else []
    messages = build_prompt(question, hits, history, params)
    text = chat_completion(messages, providers, model=params.chat_model or None)
    if text.strip() == REFUSAL_SENTENCE:
        # the model itself may refuse per its instructions; normalize the shape
        return _refused(question, created_at)
    return Answer(
        text=text,
        citations=tuple(hits),
        refused=False,
        question=question,
        created_at=created_at,
    )


def chat_completion(
    messages: list[dict],
    cfg: ProviderConfig,
    *,
    model: str | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """One non-streaming chat call; mock mode answers locally."""
    if cfg.mode == "mock":
        return canned_completion(messages)
    cfg.validate()
    payload = {"model": model or cfg.chat_model, "messages": messages}
    body = post_with_retry(f"{cfg.endpoint_url.rstrip('/')}/chat/completions", payload, cfg, sleep=sleep)
    try:
        return str(body["choices"][0]["message"]["content"])
    except (KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"malformed chat response: {exc}") from exc


def _refused(question: str, created_at: str) -> Answer:
    return Answer(
        text=REFUSAL_SENTENCE,
        citations=(),
        refused=True,
        question=question,
        created_at=created_at,
    )


def _timestamp(now: Callable[[], datetime] | None) -> str:
    current = now() if now is not None else datetime.now(timezone.utc)
    return current.astimezone(timezone.utc).isoformat()
