"""Ingestion pipeline: library listing to persisted vector index.

Per attachment: download, extract text, chunk, embed, upsert. Failures are
recorded per document and never abort the run; the whole ingest only fails
when documents were found but none made it through (or the listing itself
failed). Re-running over an unchanged library rebuilds the same chunk_id
set, so ingestion is idempotent at the index level.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from .chunking import chunk_text
from .config import AppConfig
from .embeddings import embed_batch
from .errors import KzbError
from .pdf import extract_document
from .vectorstore import VectorIndex, VectorRecord
from .zotero import ZoteroClient

logger = logging.getLogger(__name__)

PDF_ONLY = ("application/pdf",)
PDF_AND_TEXT = ("application/pdf", "text/plain")


@dataclass
class IngestStatus:
    state: str = "idle"  # idle | running | done | failed
    docs_found: int = 0
    docs_extracted: int = 0
    docs_skipped: int = 0
    chunks_indexed: int = 0
    errors: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "state": self.state,
            "docs_found": self.docs_found,
            "docs_extracted": self.docs_extracted,
            "docs_skipped": self.docs_skipped,
            "chunks_indexed": self.chunks_indexed,
            "errors": list(self.errors),
        }


class IngestJob:
    """One ingestion run; exclusive writer of its VectorIndex."""

    def __init__(
        self,
        config: AppConfig,
        *,
        client: ZoteroClient | None = None,
        index: VectorIndex | None = None,
        accept_plain_text: bool = True,
    ) -> None:
        self.config = config
        self.index = index or VectorIndex()
        self._client = client
        self._content_types = PDF_AND_TEXT if accept_plain_text else PDF_ONLY
        self.status = IngestStatus()
        self._status_lock = threading.Lock()

    def status_snapshot(self) -> dict:
        with self._status_lock:
            return self.status.as_dict()

    def run(self) -> IngestStatus:
        self._update(state="running")
        client = self._client or ZoteroClient(self.config.zotero, api_base=self.config.zotero_api_base)
        try:
            attachments = client.list_attachments(content_types=self._content_types)
        except KzbError as exc:
            self._record_error(f"listing failed: {exc}")
            self._update(state="failed")
            return self.status
        self._update(docs_found=len(attachments))

        for item in attachments:
            try:
                data = client.download_attachment(item.item_key)
                document = extract_document(
                    data,
                    item.item_key,
                    item.title,
                    filename=item.filename,
                    content_type=item.content_type,
                )
                chunks = chunk_text(document.text, document.doc_id, self.config.chunking)
                if not chunks:
                    raise KzbError("document produced no chunks")
                vectors = embed_batch([c.text for c in chunks], self.config.provider)
                records = [
                    VectorRecord(
                        chunk_id=chunk.chunk_id,
                        doc_id=chunk.doc_id,
                        start_offset=chunk.start_offset,
                        end_offset=chunk.end_offset,
                        text=chunk.text,
                        vector=vector,
                    )
                    for chunk, vector in zip(chunks, vectors)
                ]
                self.index.upsert(records)
            except KzbError as exc:
                logger.info("skipping %s: %s", item.item_key, exc)
                self._record_error(f"{item.item_key}: {exc}")
                self._update(docs_skipped=self.status.docs_skipped + 1)
                continue
            self._update(
                docs_extracted=self.status.docs_extracted + 1,
                chunks_indexed=self.status.chunks_indexed + len(records),
            )

        if self.status.docs_found > 0 and self.status.docs_extracted == 0:
            self._update(state="failed")
            return self.status

        try:
            self.config.ensure_data_dir()
            self.index.persist(self.config.index_path)
        except KzbError as exc:
            self._record_error(f"persist failed: {exc}")
            self._update(state="failed")
            return self.status
        self._update(state="done")
        return self.status

    def _update(self, **changes) -> None:
        with self._status_lock:
            for name, value in changes.items():
                setattr(self.status, name, value)

    def _record_error(self, message: str) -> None:
        with self._status_lock:
            self.status.errors.append(message)


def run_ingest(config: AppConfig, **kwargs) -> IngestStatus:
    """Synchronous one-shot ingestion (see IngestJob for the server flow)."""
    return IngestJob(config, **kwargs).run()
