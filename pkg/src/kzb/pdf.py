"""PDF text extraction to plain text.

A deliberately small PDF reader covering text-bearing documents with the
classic cross-reference layout: objects are discovered by scanning, content
streams may be raw or Flate/ASCII85/ASCIIHex encoded, and text is pulled
from the standard show operators (Tj, TJ, ', ") with line breaks inferred
from Td/TD/T*/Tm moves. Pages that carry no text operators (scanned images)
contribute nothing and surface as NoExtractableText.

Non-goals: OCR, layout reconstruction, CID/ToUnicode fonts, object streams.
Password-protected files are rejected without attempting decryption.
"""

from __future__ import annotations

import base64
import binascii
import logging
import re
import zlib
from dataclasses import dataclass, field

from .errors import EncryptedPdf, NoExtractableText, NotAPdf

logger = logging.getLogger(__name__)

_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b(.*?)endobj", re.S)
_TRAILER_RE = re.compile(rb"trailer\b(.*?)(?:startxref|\Z)", re.S)
_ROOT_RE = re.compile(rb"/Root\s+(\d+)\s+\d+\s+R")
_PAGES_RE = re.compile(rb"/Pages\s+(\d+)\s+\d+\s+R")
_KIDS_RE = re.compile(rb"/Kids\s*\[(.*?)\]", re.S)
_REF_RE = re.compile(rb"(\d+)\s+(\d+)\s+R\b")
_CONTENTS_RE = re.compile(rb"/Contents\s*(?:\[(.*?)\]|(\d+)\s+\d+\s+R)", re.S)
_TYPE_PAGE_RE = re.compile(rb"/Type\s*/Page\b")
_TYPE_PAGES_RE = re.compile(rb"/Type\s*/Pages\b")
_FILTER_RE = re.compile(rb"/Filter\s*(?:\[(.*?)\]|/([A-Za-z0-9]+))", re.S)
_NAME_RE = re.compile(rb"/([A-Za-z0-9]+)")
_STREAM_START_RE = re.compile(rb"stream(?:\r\n|\n|\r)")
_LENGTH_DIRECT_RE = re.compile(rb"/Length\s+(\d+)(?!\s+\d+\s+R)")
_LENGTH_REF_RE = re.compile(rb"/Length\s+(\d+)\s+\d+\s+R")
_INT_RE = re.compile(rb"\s*(\d+)")

_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"
_NUM_START = b"+-.0123456789"
_TJ_SPACE_KERN = -180.0  # thousandths of an em; wider gaps read as word breaks


@dataclass(frozen=True)
class ExtractedDocument:
    doc_id: str
    title: str
    text: str
    page_count: int
    char_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "char_count", len(self.text))


def extract_text(data: bytes, doc_id: str, title: str) -> ExtractedDocument:
    """Extract plain text from PDF bytes, pages joined by a newline.

    Raises NotAPdf on missing magic or unparseable structure, EncryptedPdf
    for password-protected files, NoExtractableText when nothing text-like
    survives (e.g. image-only scans).
    """
    data = bytes(data)
    if b"%PDF-" not in data[:1024]:
        raise NotAPdf("missing %PDF header")
    if _is_encrypted(data):
        raise EncryptedPdf("document declares an /Encrypt dictionary")

    objects = _scan_objects(data)
    if not objects:
        raise NotAPdf("no PDF objects found")

    pages = _page_objects(data, objects)
    if pages is None:
        # damaged or exotic page tree: fall back to scanning every stream
        pages = [body for _, body in sorted(objects.items()) if _STREAM_START_RE.search(body)]
        page_count = max(1, len(_TYPE_PAGE_RE.findall(data)))
    else:
        page_count = len(pages)

    page_texts = [_page_text(body, objects) for body in pages]
    text = normalize_text("\n".join(page_texts))
    if not text.strip():
        raise NoExtractableText(f"no extractable text in document {doc_id!r}")
    return ExtractedDocument(doc_id=doc_id, title=title, text=text, page_count=page_count)


def extract_plain_text(data: bytes, doc_id: str, title: str) -> ExtractedDocument:
    """Pass-through for .txt attachments; same normalization as PDFs."""
    text = normalize_text(bytes(data).decode("utf-8-sig", errors="replace"))
    if not text.strip():
        raise NoExtractableText(f"document {doc_id!r} is empty")
    return ExtractedDocument(doc_id=doc_id, title=title, text=text, page_count=1)


def extract_document(
    data: bytes,
    doc_id: str,
    title: str,
    *,
    filename: str | None = None,
    content_type: str | None = None,
) -> ExtractedDocument:
    """Route attachment bytes to the right extractor by declared type."""
    if content_type == "text/plain" or (filename or "").lower().endswith(".txt"):
        return extract_plain_text(data, doc_id, title)
    return extract_text(data, doc_id, title)


def normalize_text(text: str) -> str:
    """Normalize line endings, drop NULs, collapse 3+ blank lines to one."""
    text = text.replace("\r\n", "\n").replace("\r", "\n").replace("\x00", "")
    return re.sub(r"\n{4,}", "\n\n", text)


# --- document structure ---


def _scan_objects(data: bytes) -> dict[int, bytes]:
    # later definitions win, matching incremental-update semantics
    objects: dict[int, bytes] = {}
    for match in _OBJ_RE.finditer(data):
        objects[int(match.group(1))] = match.group(3)
    return objects


def _is_encrypted(data: bytes) -> bool:
    regions = [m.group(1) for m in _TRAILER_RE.finditer(data)]
    if not regions:
        regions = [data[-4096:]]
    return any(b"/Encrypt" in region for region in regions)


def _page_objects(data: bytes, objects: dict[int, bytes]) -> list[bytes] | None:
    root = None
    for match in _ROOT_RE.finditer(data):
        root = int(match.group(1))  # last trailer wins
    if root is None or root not in objects:
        return None
    pages_match = _PAGES_RE.search(objects[root])
    if not pages_match:
        return None

    pages: list[bytes] = []
    visited: set[int] = set()

    def walk(num: int) -> None:
        if num in visited or num not in objects:
            return
        visited.add(num)
        body = objects[num]
        kids = _KIDS_RE.search(body)
        if _TYPE_PAGES_RE.search(body) or (kids and not _TYPE_PAGE_RE.search(body)):
            if kids:
                for ref in _REF_RE.finditer(kids.group(1)):
                    walk(int(ref.group(1)))
        else:
            pages.append(body)

    walk(int(pages_match.group(1)))
    return pages if pages else None


def _page_text(body: bytes, objects: dict[int, bytes]) -> str:
    contents = _CONTENTS_RE.search(body)
    if contents:
        if contents.group(2) is not None:
            refs = [int(contents.group(2))]
        else:
            refs = [int(m.group(1)) for m in _REF_RE.finditer(contents.group(1))]
        streams = [objects[r] for r in refs if r in objects]
    elif _STREAM_START_RE.search(body):
        streams = [body]  # fallback mode hands us stream-bearing objects directly
    else:
        return ""

    parts = []
    for stream_body in streams:
        decoded = _decoded_stream(stream_body, objects)
        if decoded is not None:
            parts.append(decoded)
    if not parts:
        return ""
    return _content_text(b"\n".join(parts))


def _decoded_stream(body: bytes, objects: dict[int, bytes]) -> bytes | None:
    start_match = _STREAM_START_RE.search(body)
    if not start_match:
        return None
    header = body[: start_match.start()]
    raw = body[start_match.end() :]

    length = None
    direct = _LENGTH_DIRECT_RE.search(header)
    if direct:
        length = int(direct.group(1))
    else:
        ref = _LENGTH_REF_RE.search(header)
        if ref and int(ref.group(1)) in objects:
            num = _INT_RE.match(objects[int(ref.group(1))])
            if num:
                length = int(num.group(1))
    if length is not None and length <= len(raw):
        raw = raw[:length]
    else:
        end = raw.rfind(b"endstream")
        if end != -1:
            raw = raw[:end].rstrip(b"\r\n")

    filters: list[bytes] = []
    filter_match = _FILTER_RE.search(header)
    if filter_match:
        if filter_match.group(2) is not None:
            filters = [filter_match.group(2)]
        else:
            filters = [m.group(1) for m in _NAME_RE.finditer(filter_match.group(1))]

    try:
        for name in filters:
            if name == b"FlateDecode":
                raw = zlib.decompress(raw)
            elif name == b"ASCII85Decode":
                raw = _a85decode(raw)
            elif name == b"ASCIIHexDecode":
                raw = _ahxdecode(raw)
            else:
                logger.debug("skipping stream with unsupported filter %r", name)
                return None
    except (zlib.error, ValueError, binascii.Error) as exc:
        logger.debug("undecodable stream skipped: %s", exc)
        return None
    return raw


def _a85decode(raw: bytes) -> bytes:
    text = bytes(raw).strip()
    if text.endswith(b"~>"):
        text = text[:-2]
    if text.startswith(b"<~"):
        text = text[2:]
    return base64.a85decode(b"<~" + text + b"~>", adobe=True)


def _ahxdecode(raw: bytes) -> bytes:
    text = re.sub(rb"\s+", b"", raw)
    if text.endswith(b">"):
        text = text[:-1]
    if len(text) % 2:
        text += b"0"
    return binascii.unhexlify(text)


# --- content stream interpretation ---


def _content_text(content: bytes) -> str:
    """Run the text operators, grouping shown strings into visual lines.

    Tracks the text cursor's vertical position: a show at a new y starts a
    new output line, a show at the same y after a positioning op gets a
    single separating space. Kern gaps wider than _TJ_SPACE_KERN inside TJ
    arrays also read as spaces.
    """
    lines: list[str] = []
    current: list[str] = []
    stack: list[object] = []
    cursor_y = 0.0
    leading = 0.0
    last_show_y: float | None = None
    gap_pending = False

    def flush() -> None:
        if current:
            lines.append("".join(current))
            current.clear()

    def show(raw: bytes, gap: bool) -> None:
        nonlocal last_show_y
        piece = _string_to_text(raw)
        if not piece:
            return
        if last_show_y is not None and cursor_y != last_show_y:
            flush()
        if gap and current and not current[-1][-1:].isspace() and not piece[:1].isspace():
            current.append(" ")
        current.append(piece)
        last_show_y = cursor_y

    i = 0
    n = len(content)
    while i < n:
        byte = content[i : i + 1]
        if byte in b"\x00\t\n\x0c\r ":
            i += 1
        elif byte == b"%":
            eol = content.find(b"\n", i)
            i = n if eol == -1 else eol + 1
        elif byte == b"(":
            value, i = _parse_literal_string(content, i)
            stack.append(value)
        elif byte == b"<":
            if content[i : i + 2] == b"<<":
                i = _skip_dict(content, i)
                stack.append(None)
            else:
                value, i = _parse_hex_string(content, i)
                stack.append(value)
        elif byte == b"[":
            value, i = _parse_array(content, i)
            stack.append(value)
        elif byte == b"]" or byte == b">":
            i += 1  # stray delimiter; be lenient
        elif byte == b"/":
            match = _NAME_RE.match(content, i)
            if match:
                stack.append(match.group(1))
                i = match.end()
            else:
                i += 1
        elif byte in _NUM_START:
            match = re.match(rb"[+-]?(?:\d+\.?\d*|\.\d+)", content[i:])
            if match:
                stack.append(float(match.group()))
                i += match.end()
            else:
                i += 1
        else:
            match = re.match(rb"[^\x00\t\n\x0c\r ()<>\[\]{}/%]+", content[i:])
            op = match.group() if match else byte
            i += len(op)

            if op == b"Tj" and stack and isinstance(stack[-1], bytes):
                show(stack[-1], gap_pending)
                gap_pending = False
            elif op == b"TJ" and stack and isinstance(stack[-1], list):
                gap = gap_pending
                for element in stack[-1]:
                    if isinstance(element, bytes):
                        show(element, gap)
                        gap = False
                    elif isinstance(element, float) and element <= _TJ_SPACE_KERN:
                        gap = True
                gap_pending = False
            elif op in (b"'", b'"') and stack and isinstance(stack[-1], bytes):
                cursor_y -= leading
                show(stack[-1], False)
                gap_pending = False
            elif op in (b"Td", b"TD") and len(stack) >= 2 and isinstance(stack[-1], float):
                if op == b"TD":
                    leading = -stack[-1]
                cursor_y += stack[-1]
                gap_pending = True
            elif op == b"Tm" and len(stack) >= 6 and isinstance(stack[-1], float):
                cursor_y = stack[-1]
                gap_pending = True
            elif op == b"T*":
                cursor_y -= leading
            elif op == b"TL" and stack and isinstance(stack[-1], float):
                leading = stack[-1]
            elif op == b"BT":
                cursor_y = 0.0
            elif op == b"BI":
                i = _skip_inline_image(content, i)
            stack.clear()
    flush()
    return "\n".join(lines)


def _string_to_text(raw: bytes) -> str:
    if raw[:2] == b"\xfe\xff":
        return raw[2:].decode("utf-16-be", errors="replace")
    try:
        return raw.decode("cp1252")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _parse_literal_string(data: bytes, i: int) -> tuple[bytes, int]:
    # data[i] == "(" ; parentheses nest, backslash escapes per the PDF grammar
    i += 1
    depth = 1
    out = bytearray()
    n = len(data)
    while i < n:
        b = data[i]
        if b == 0x5C:  # backslash
            i += 1
            if i >= n:
                break
            e = data[i]
            if e in b"nrtbf":
                out.append({0x6E: 10, 0x72: 13, 0x74: 9, 0x62: 8, 0x66: 12}[e])
                i += 1
            elif e in (0x28, 0x29, 0x5C):
                out.append(e)
                i += 1
            elif 0x30 <= e <= 0x37:
                digits = bytearray()
                while i < n and 0x30 <= data[i] <= 0x37 and len(digits) < 3:
                    digits.append(data[i])
                    i += 1
                out.append(int(digits, 8) & 0xFF)
            elif e == 0x0D:
                i += 1
                if i < n and data[i] == 0x0A:
                    i += 1
            elif e == 0x0A:
                i += 1
            else:
                out.append(e)
                i += 1
        elif b == 0x28:
            depth += 1
            out.append(b)
            i += 1
        elif b == 0x29:
            depth -= 1
            if depth == 0:
                return bytes(out), i + 1
            out.append(b)
            i += 1
        else:
            out.append(b)
            i += 1
    return bytes(out), i


def _parse_hex_string(data: bytes, i: int) -> tuple[bytes, int]:
    end = data.find(b">", i + 1)
    if end == -1:
        end = len(data)
    body = re.sub(rb"\s+", b"", data[i + 1 : end])
    if len(body) % 2:
        body += b"0"
    try:
        return binascii.unhexlify(body), end + 1
    except binascii.Error:
        return b"", end + 1


def _parse_array(data: bytes, i: int) -> tuple[list, int]:
    # arrays in text context hold strings and kern numbers
    i += 1
    out: list = []
    n = len(data)
    while i < n:
        byte = data[i : i + 1]
        if byte == b"]":
            return out, i + 1
        if byte in b"\x00\t\n\x0c\r ":
            i += 1
        elif byte == b"(":
            value, i = _parse_literal_string(data, i)
            out.append(value)
        elif byte == b"<":
            value, i = _parse_hex_string(data, i)
            out.append(value)
        elif byte == b"[":
            value, i = _parse_array(data, i)
            out.append(value)
        elif byte == b"/":
            match = _NAME_RE.match(data, i)
            i = match.end() if match else i + 1
        else:
            match = re.match(rb"[+-]?(?:\d+\.?\d*|\.\d+)", data[i:])
            if match:
                out.append(float(match.group()))
                i += match.end()
            else:
                i += 1
    return out, i


def _skip_dict(data: bytes, i: int) -> int:
    depth = 0
    n = len(data)
    while i < n:
        if data[i : i + 2] == b"<<":
            depth += 1
            i += 2
        elif data[i : i + 2] == b">>":
            depth -= 1
            i += 2
            if depth == 0:
                return i
        elif data[i : i + 1] == b"(":
            _, i = _parse_literal_string(data, i)
        else:
            i += 1
    return n


def _skip_inline_image(data: bytes, i: int) -> int:
    marker = data.find(b"ID", i)
    if marker == -1:
        return len(data)
    end = re.search(rb"\sEI(?=[\x00\t\n\x0c\r ]|$)", data[marker:])
    if end is None:
        return len(data)
    return marker + end.end()
