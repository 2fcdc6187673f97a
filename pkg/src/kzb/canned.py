"""Deterministic offline stand-in for the chat-completion model.

Answers with the context sentence sharing the most words with the question;
if nothing overlaps at all, it falls back to the fixed refusal sentence.
Crude, but it makes end-to-end behavior fully predictable: a fact planted in
exactly one document surfaces verbatim in the reply.
"""

from __future__ import annotations

import re

from .prompts import REFUSAL_SENTENCE

_WORD_RE = re.compile(r"\w+")
_QUESTION_RE = re.compile(r"Question:\s*(.+?)\s*$", re.S)
_SOURCE_TAG_RE = re.compile(r"^\[source:[^\]]*\]\s*$")


def canned_completion(messages: list[dict]) -> str:
    """Pick the best-overlapping context sentence for the last user message."""
    user = next((m.get("content", "") for m in reversed(messages) if m.get("role") == "user"), "")
    match = _QUESTION_RE.search(user)
    if match:
        question = match.group(1)
        context = user[: match.start()]
    else:
        question = user
        context = user
    question_words = {w.lower() for w in _WORD_RE.findall(question)}

    best_sentence = None
    best_overlap = 0
    for sentence in _sentences(context):
        words = {w.lower() for w in _WORD_RE.findall(sentence)}
        overlap = len(question_words & words)
        if overlap > best_overlap:  # ties keep the earliest sentence
            best_overlap = overlap
            best_sentence = sentence
    if best_sentence is None or best_overlap == 0:
        return REFUSAL_SENTENCE
    return best_sentence


def _sentences(context: str) -> list[str]:
    pieces: list[str] = []
    for line in context.split("\n"):
        line = line.strip()
        if not line or _SOURCE_TAG_RE.match(line):
            continue
        for sentence in re.split(r"(?<=[.!?])\s+", line):
            sentence = sentence.strip()
            if sentence:
                pieces.append(sentence)
    return pieces
