"""Shared fixtures: PDF builders, mock servers, and the planted-fact corpus."""

from __future__ import annotations

from io import BytesIO
from pathlib import Path

import pytest
from reportlab.lib.pagesizes import letter
from reportlab.pdfgen import canvas

from kzb import AppConfig, ChunkingParams, LibraryDescriptor, ProviderConfig, RagParams
from kzb.chunking import chunk_text
from kzb.embeddings import mock_embed
from kzb.testing import MockOpenAIServer, MockZoteroServer
from kzb.vectorstore import VectorIndex, VectorRecord


def build_pdf(pages: list[list[str]], *, compress: int = 1, encrypt: str | None = None) -> bytes:
    """One text PDF from lists of lines, one list per page."""
    buf = BytesIO()
    kwargs = {"pagesize": letter, "pageCompression": compress}
    if encrypt is not None:
        kwargs["encrypt"] = encrypt
    pdf = canvas.Canvas(buf, **kwargs)
    for lines in pages:
        text = pdf.beginText(72, 720)
        for line in lines:
            text.textLine(line)
        pdf.drawText(text)
        pdf.showPage()
    pdf.save()
    return buf.getvalue()


def build_image_pdf() -> bytes:
    """A page with drawing but no text operators (stands in for a scan)."""
    buf = BytesIO()
    pdf = canvas.Canvas(buf, pagesize=letter)
    pdf.rect(100, 100, 300, 300, fill=1)
    pdf.showPage()
    pdf.save()
    return buf.getvalue()


@pytest.fixture
def make_pdf():
    return build_pdf


# One summary line per release criterion (tests marked `acceptance`).
_acceptance_results: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    failed_setup = report.when == "setup" and report.outcome != "passed"
    if report.when == "call" or failed_setup:
        label = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _acceptance_results.append((label, report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in _acceptance_results:
        word = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{word}  {label}")


# The planted-fact corpus: the fact lives in exactly one document. Texts are
# long enough to chunk but small enough that tests stay fast.
PLANTED_FACT = "The melting point of zobotite is 451 degrees."
PLANTED_DOC = "BBB22222"
PLANTED_QUESTION = "what is the melting point of zobotite?"
# scores well under the 0.25 floor against CORPUS in the mock embedding space
OFF_TOPIC_QUESTION = "how do quasar penguins yodel underwater?"

CORPUS = {
    "AAA11111": (
        "Alpha study",
        [
            "Granite is an igneous rock formed from slowly cooled magma.",
            "It is rich in quartz and feldspar minerals.",
            "Weathering breaks granite into coarse sandy soils.",
        ],
    ),
    PLANTED_DOC: (
        "Beta study",
        [
            PLANTED_FACT,
            "Zobotite crystals glow faintly under ultraviolet light.",
            "Samples were collected from three basalt outcrops.",
        ],
    ),
    "CCC33333": (
        "Gamma study",
        [
            "Honey bees communicate through waggle dances.",
            "Forager bees indicate distance by dance duration.",
            "Hive temperature is regulated by collective fanning.",
        ],
    ),
}


def build_corpus_index(dimension: int = 64, *, chunk_size: int = 200, chunk_overlap: int = 20) -> VectorIndex:
    """Chunk + mock-embed the corpus into a fresh in-memory index."""
    params = ChunkingParams(chunk_size=chunk_size, chunk_overlap=chunk_overlap)
    index = VectorIndex()
    for doc_id, (_, lines) in CORPUS.items():
        records = [
            VectorRecord(
                chunk_id=c.chunk_id, doc_id=c.doc_id, start_offset=c.start_offset,
                end_offset=c.end_offset, text=c.text,
                vector=mock_embed(c.text, dimension),
            )
            for c in chunk_text("\n".join(lines), doc_id, params)
        ]
        index.upsert(records)
    return index


@pytest.fixture
def zotero_server():
    with MockZoteroServer() as server:
        yield server


@pytest.fixture
def corpus_zotero():
    """Mock library preloaded with the three-document corpus plus a note."""
    with MockZoteroServer() as server:
        for doc_id, (title, lines) in CORPUS.items():
            server.state.add_pdf(doc_id, title, build_pdf([lines]))
        server.state.add_note("NOTE0001", "reading notes, not an attachment")
        yield server


@pytest.fixture
def openai_server():
    with MockOpenAIServer() as server:
        yield server


@pytest.fixture
def app_config(tmp_path: Path, corpus_zotero) -> AppConfig:
    """Config wired to the corpus mock library, mock providers, tmp data dir."""
    return AppConfig(
        zotero=LibraryDescriptor("user", "1", "good-key"),
        provider=ProviderConfig(mode="mock"),
        chunking=ChunkingParams(chunk_size=200, chunk_overlap=20),
        rag=RagParams(),
        data_dir=tmp_path / "data",
        zotero_api_base=corpus_zotero.base_url,
    )
