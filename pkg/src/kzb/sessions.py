"""Chat session persistence and CSV export.

Each session lives in its own append-only JSON-lines file under the store
root: one metadata line, then one line per turn, every line carrying a ``v``
format version. Appends are flushed and fsynced before returning, so a turn
that was acknowledged survives a process kill.

The CSV writer is hand-rolled on purpose: tests check the exported bytes
against the standard library's csv parser, which only works as an
independent oracle if it plays no part in producing the output.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from .errors import IoError, RoleOrderViolation, UnknownSession

LINE_VERSION = 1
CSV_HEADER = "turn_index,timestamp,role,content,citations"

ROLES = ("user", "assistant")


@dataclass(frozen=True)
class ChatTurn:
    turn_index: int
    role: str
    content: str
    timestamp: str
    citations: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "role": self.role,
            "content": self.content,
            "timestamp": self.timestamp,
            "citations": list(self.citations),
        }


@dataclass
class Session:
    session_id: str
    created_at: str
    turns: list[ChatTurn] = field(default_factory=list)


class SessionStore:
    """Directory of per-session JSONL files; appends serialized per session."""

    def __init__(self, root: str | Path, *, now: Callable[[], datetime] | None = None) -> None:
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create session directory: {exc}") from exc
        self._now = now or (lambda: datetime.now(timezone.utc))
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def create_session(self) -> Session:
        session_id = str(uuid.uuid4())
        created_at = self._timestamp()
        header = {"v": LINE_VERSION, "kind": "session", "session_id": session_id, "created_at": created_at}
        self._append_line(session_id, header)
        return Session(session_id=session_id, created_at=created_at)

    def get_session(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.exists():
            raise UnknownSession(f"no session {session_id!r}")
        created_at = ""
        turns: list[ChatTurn] = []
        try:
            raw_lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoError(f"cannot read session file: {exc}") from exc
        for lineno, raw in enumerate(raw_lines, 1):
            if not raw.strip():
                continue
            try:
                entry = json.loads(raw)
            except ValueError as exc:
                raise IoError(f"session {session_id}: bad JSON at line {lineno}") from exc
            if entry.get("kind") == "session":
                created_at = entry.get("created_at", "")
            elif entry.get("kind") == "turn":
                turns.append(
                    ChatTurn(
                        turn_index=int(entry["turn_index"]),
                        role=entry["role"],
                        content=entry["content"],
                        timestamp=entry.get("timestamp", ""),
                        citations=tuple(entry.get("citations", [])),
                    )
                )
        turns.sort(key=lambda t: t.turn_index)
        return Session(session_id=session_id, created_at=created_at, turns=turns)

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def append_turn(
        self,
        session_id: str,
        role: str,
        content: str,
        citations: Iterable[str] = (),
    ) -> ChatTurn:
        if role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {role!r}")
        with self._lock(session_id):
            session = self.get_session(session_id)
            expected = "user" if not session.turns else _other(session.turns[-1].role)
            if role != expected:
                raise RoleOrderViolation(
                    f"expected a {expected} turn at index {len(session.turns)}, got {role}"
                )
            turn = ChatTurn(
                turn_index=len(session.turns),
                role=role,
                content=content,
                timestamp=self._timestamp(),
                citations=tuple(citations),
            )
            entry = {"v": LINE_VERSION, "kind": "turn", **turn.as_dict()}
            self._append_line(session_id, entry)
            return turn

    def get_history(self, session_id: str) -> list[ChatTurn]:
        return self.get_session(session_id).turns

    def export_csv(self, session_id: str) -> bytes:
        """RFC 4180 bytes: CRLF rows, minimal quoting, citations ;-joined."""
        session = self.get_session(session_id)
        rows = [CSV_HEADER]
        for turn in session.turns:
            rows.append(
                ",".join(
                    _csv_field(value)
                    for value in (
                        str(turn.turn_index),
                        turn.timestamp,
                        turn.role,
                        turn.content,
                        ";".join(turn.citations),
                    )
                )
            )
        return ("\r\n".join(rows) + "\r\n").encode("utf-8")

    # --- internals ---

    def _path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or "\\" in session_id or ".." in session_id:
            raise UnknownSession(f"no session {session_id!r}")
        return self.root / f"{session_id}.jsonl"

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _timestamp(self) -> str:
        return self._now().astimezone(timezone.utc).isoformat()

    def _append_line(self, session_id: str, entry: dict) -> None:
        path = self._path(session_id)
        try:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise IoError(f"cannot append to session file: {exc}") from exc


def _other(role: str) -> str:
    return "assistant" if role == "user" else "user"


def _csv_field(value: str) -> str:
    if any(ch in value for ch in ',"\r\n'):
        return '"' + value.replace('"', '""') + '"'
    return value
