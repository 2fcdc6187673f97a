"""Read-only Zotero Web API v3 client.

Enumerates PDF attachments in a user or group library (optionally scoped to
one collection) and downloads their bytes. Strictly GET-only; the API key
travels in the Zotero-API-Key header, never in URLs, logs, or errors.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import requests

from .errors import (
    AuthFailed,
    InvalidDescriptor,
    NotFound,
    RateLimited,
    TransportError,
)

logger = logging.getLogger(__name__)

DEFAULT_API_BASE = "https://api.zotero.org"
API_VERSION = "3"
PAGE_SIZE = 100
MAX_RETRIES = 3


@dataclass(frozen=True)
class LibraryDescriptor:
    """Which Zotero library to read and how to authenticate."""

    library_type: str  # "user" or "group"
    library_id: str
    api_key: str = ""
    collection_id: str | None = None

    def validate(self) -> None:
        if self.library_type not in ("user", "group"):
            raise InvalidDescriptor(f"library_type must be 'user' or 'group', got {self.library_type!r}")
        if not self.library_id or not self.library_id.isdigit():
            raise InvalidDescriptor("library_id must be a non-empty string of digits")
        if self.collection_id is not None:
            cid = self.collection_id
            if not cid or not all(c.isascii() and (c.isdigit() or c.isupper()) for c in cid):
                raise InvalidDescriptor("collection_id must be non-empty and contain only [A-Z0-9]")


@dataclass(frozen=True)
class ItemRecord:
    """Projection of a Zotero item: just what ingestion needs."""

    item_key: str
    parent_key: str | None = None
    title: str = ""
    content_type: str | None = None
    filename: str | None = None


def build_items_url(
    desc: LibraryDescriptor,
    start: int,
    limit: int,
    *,
    api_base: str = DEFAULT_API_BASE,
) -> str:
    """Items listing URL for one page; collection segment present iff scoped."""
    desc.validate()
    if start < 0:
        raise InvalidDescriptor("start must be non-negative")
    if not 0 < limit <= 100:
        raise InvalidDescriptor("limit must be in 1..100")
    prefix = "users" if desc.library_type == "user" else "groups"
    path = f"{api_base}/{prefix}/{desc.library_id}"
    if desc.collection_id is not None:
        path += f"/collections/{desc.collection_id}"
    return f"{path}/items?start={start}&limit={limit}&format=json"


class ZoteroClient:
    """Stateless-per-request client; safe for concurrent use."""

    def __init__(
        self,
        desc: LibraryDescriptor,
        *,
        api_base: str = DEFAULT_API_BASE,
        timeout: float = 30.0,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
        retry_base_delay: float = 1.0,
    ) -> None:
        desc.validate()
        self.desc = desc
        self.api_base = api_base.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._sleep = sleep
        self._retry_base_delay = retry_base_delay

    @property
    def _headers(self) -> dict[str, str]:
        headers = {"Zotero-API-Version": API_VERSION}
        if self.desc.api_key:
            headers["Zotero-API-Key"] = self.desc.api_key
        return headers

    def list_pdf_attachments(self, *, page_size: int = PAGE_SIZE) -> list[ItemRecord]:
        """Every PDF attachment in scope, deduplicated, pagination exhausted."""
        return self.list_attachments(content_types=("application/pdf",), page_size=page_size)

    def list_attachments(
        self,
        *,
        content_types: tuple[str, ...] = ("application/pdf",),
        page_size: int = PAGE_SIZE,
    ) -> list[ItemRecord]:
        """Attachments matching any of ``content_types``, in listing order."""
        records: dict[str, ItemRecord] = {}
        start = 0
        total = None
        while True:
            url = build_items_url(self.desc, start, page_size, api_base=self.api_base)
            response = self._get(url)
            try:
                items = response.json()
            except ValueError as exc:
                raise TransportError("items response is not valid JSON") from exc
            header_total = response.headers.get("Total-Results")
            if header_total is not None and header_total.isdigit():
                total = int(header_total)
            for item in items:
                record = _item_record(item)
                if record is not None and record.content_type in content_types:
                    records[record.item_key] = record
            start += len(items)
            if not items:
                break
            if total is not None and start >= total:
                break
        return list(records.values())

    def download_attachment(self, item_key: str) -> bytes:
        """Raw file bytes for one attachment item."""
        if not item_key:
            raise NotFound("empty item key")
        prefix = "users" if self.desc.library_type == "user" else "groups"
        url = f"{self.api_base}/{prefix}/{self.desc.library_id}/items/{item_key}/file"
        return self._get(url).content

    def validate_credentials(self) -> None:
        """One-item probe; raises the same taxonomy as the listing call."""
        self._get(build_items_url(self.desc, 0, 1, api_base=self.api_base))

    def _get(self, url: str) -> requests.Response:
        last_status = None
        for attempt in range(MAX_RETRIES + 1):
            try:
                response = self._session.get(url, headers=self._headers, timeout=self.timeout)
            except requests.RequestException as exc:
                # exception text may embed the URL; keys never ride in URLs
                raise TransportError(f"request to Zotero failed: {exc}") from None
            if response.status_code == 200:
                return response
            if response.status_code in (401, 403):
                raise AuthFailed("Zotero rejected the API key (HTTP %d)" % response.status_code)
            if response.status_code == 404:
                raise NotFound("Zotero resource not found; check library and collection ids")
            if response.status_code == 429 or response.status_code >= 500:
                last_status = response.status_code
                if attempt < MAX_RETRIES:
                    delay = _retry_delay(response.headers.get("Retry-After"), attempt, self._retry_base_delay)
                    logger.debug("Zotero HTTP %d; retry %d in %.1fs", last_status, attempt + 1, delay)
                    self._sleep(delay)
                    continue
                break
            raise TransportError(f"unexpected Zotero response HTTP {response.status_code}")
        if last_status == 429:
            raise RateLimited("Zotero rate limit persisted after retries")
        raise TransportError(f"Zotero server error HTTP {last_status} after retries")


def _item_record(item: dict) -> ItemRecord | None:
    data = item.get("data", item)
    key = data.get("key") or item.get("key")
    if not key:
        return None
    return ItemRecord(
        item_key=key,
        parent_key=data.get("parentItem"),
        title=data.get("title", ""),
        content_type=data.get("contentType"),
        filename=data.get("filename"),
    )


def _retry_delay(retry_after: str | None, attempt: int, base: float) -> float:
    if retry_after is not None:
        try:
            return max(0.0, float(retry_after))
        except ValueError:
            pass
    return base * (2**attempt)
