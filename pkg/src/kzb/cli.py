"""Command-line interface: configure, ingest, ask, chat, export, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import AppConfig, config_to_dict, load_config, save_config
from .errors import KzbError
from .ingest import run_ingest
from .rag import answer_question
from .sessions import SessionStore
from .vectorstore import VectorIndex

# argparse dest -> dotted config override path
_OVERRIDE_MAP = {
    "library_type": "zotero.library_type",
    "library_id": "zotero.library_id",
    "zotero_api_key": "zotero.api_key",
    "collection_id": "zotero.collection_id",
    "zotero_api_base": "zotero.api_base",
    "openai_api_key": "provider.api_key",
    "endpoint_url": "provider.endpoint_url",
    "embedding_model": "provider.embedding_model",
    "chat_model": "provider.chat_model",
    "mode": "provider.mode",
    "mock_dimension": "provider.mock_dimension",
    "chunk_size": "chunking.chunk_size",
    "chunk_overlap": "chunking.chunk_overlap",
    "top_k": "rag.top_k",
    "similarity_floor": "rag.similarity_floor",
    "max_history_turns": "rag.max_history_turns",
    "listen_addr": "server.listen_addr",
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.handler(args)
    except KzbError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print()
        return 130


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kzb",
        description="Question answering over a Zotero library's PDFs.",
    )
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    configure = sub.add_parser("configure", help="write settings to kzb.toml")
    _add_config_flags(configure, full=True)
    configure.set_defaults(handler=_cmd_configure)

    ingest = sub.add_parser("ingest", help="build the vector index from the library")
    _add_config_flags(ingest)
    ingest.set_defaults(handler=_cmd_ingest)

    ask = sub.add_parser("ask", help="ask a single question")
    ask.add_argument("question")
    ask.add_argument("--session", default=None, help="existing session id to continue")
    _add_config_flags(ask)
    ask.set_defaults(handler=_cmd_ask)

    chat = sub.add_parser("chat", help="interactive question loop")
    chat.add_argument("--session", default=None, help="existing session id to continue")
    _add_config_flags(chat)
    chat.set_defaults(handler=_cmd_chat)

    export = sub.add_parser("export", help="export a session history as CSV")
    export.add_argument("--session", required=True)
    export.add_argument("--out", required=True)
    export.add_argument("--data-dir", dest="data_dir", default=None)
    export.set_defaults(handler=_cmd_export)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.add_argument("--static", default=None, help="directory of web UI files to serve at /")
    serve.add_argument("--demo", action="store_true", help="serve a built-in sample corpus in mock mode")
    _add_config_flags(serve)
    serve.set_defaults(handler=_cmd_serve)

    return parser


def _add_config_flags(parser: argparse.ArgumentParser, *, full: bool = False) -> None:
    parser.add_argument("--data-dir", dest="data_dir", default=None)
    parser.add_argument("--mode", choices=("live", "mock"), default=None)
    if not full:
        return
    parser.add_argument("--library-type", dest="library_type", choices=("user", "group"), default=None)
    parser.add_argument("--library-id", dest="library_id", default=None)
    parser.add_argument("--zotero-api-key", dest="zotero_api_key", default=None)
    parser.add_argument("--collection-id", dest="collection_id", default=None)
    parser.add_argument("--zotero-api-base", dest="zotero_api_base", default=None)
    parser.add_argument("--openai-api-key", dest="openai_api_key", default=None)
    parser.add_argument("--endpoint-url", dest="endpoint_url", default=None)
    parser.add_argument("--embedding-model", dest="embedding_model", default=None)
    parser.add_argument("--chat-model", dest="chat_model", default=None)
    parser.add_argument("--mock-dimension", dest="mock_dimension", type=int, default=None)
    parser.add_argument("--chunk-size", dest="chunk_size", type=int, default=None)
    parser.add_argument("--chunk-overlap", dest="chunk_overlap", type=int, default=None)
    parser.add_argument("--top-k", dest="top_k", type=int, default=None)
    parser.add_argument("--similarity-floor", dest="similarity_floor", type=float, default=None)
    parser.add_argument("--max-history-turns", dest="max_history_turns", type=int, default=None)
    parser.add_argument("--listen-addr", dest="listen_addr", default=None)


def _load(args) -> AppConfig:
    overrides = {
        dotted: getattr(args, dest)
        for dest, dotted in _OVERRIDE_MAP.items()
        if getattr(args, dest, None) is not None
    }
    return load_config(data_dir=args.data_dir, overrides=overrides)


def _cmd_configure(args) -> int:
    config = _load(args)
    config.chunking.validate()
    config.rag.validate()
    path = save_config(config)
    print(f"wrote {path}")
    redacted = config_to_dict(config, redact=True)
    for section, values in redacted.items():
        for key, value in values.items():
            if key == "system_message":
                continue
            print(f"  {section}.{key} = {value}")
    return 0


def _cmd_ingest(args) -> int:
    config = _load(args)
    config.validate()
    status = run_ingest(config)
    print(f"state: {status.state}")
    print(f"documents found:     {status.docs_found}")
    print(f"documents extracted: {status.docs_extracted}")
    print(f"documents skipped:   {status.docs_skipped}")
    print(f"chunks indexed:      {status.chunks_indexed}")
    for message in status.errors:
        print(f"  ! {message}")
    return 0 if status.state == "done" else 1


def _open_index(config: AppConfig) -> VectorIndex:
    if not config.index_path.exists():
        raise KzbError("no index found; run `kzb ingest` first")
    return VectorIndex.load(config.index_path)


def _answer_once(config: AppConfig, store: SessionStore, index: VectorIndex,
                 session_id: str, question: str) -> None:
    session = store.get_session(session_id)
    answer = answer_question(question, session, config.rag, index, config.provider)
    store.append_turn(session_id, "user", question)
    store.append_turn(
        session_id, "assistant", answer.text,
        citations=[hit.chunk_id for hit in answer.citations],
    )
    print(answer.text)
    for rank, hit in enumerate(answer.citations, 1):
        print(f"  [{rank}] {hit.chunk_id} (score {hit.score:.3f})")


def _cmd_ask(args) -> int:
    config = _load(args)
    index = _open_index(config)
    store = SessionStore(config.sessions_dir)
    session_id = args.session or store.create_session().session_id
    _answer_once(config, store, index, session_id, args.question)
    return 0


def _cmd_chat(args) -> int:
    config = _load(args)
    index = _open_index(config)
    store = SessionStore(config.sessions_dir)
    session_id = args.session or store.create_session().session_id
    print(f"session {session_id} — type a question, or 'exit' to quit")
    while True:
        try:
            question = input("you> ").strip()
        except EOFError:
            print()
            return 0
        if question in ("exit", "quit"):
            return 0
        if not question:
            continue
        try:
            _answer_once(config, store, index, session_id, question)
        except KzbError as exc:
            print(f"error ({exc.code}): {exc}", file=sys.stderr)


def _cmd_export(args) -> int:
    config = load_config(data_dir=args.data_dir)
    store = SessionStore(config.sessions_dir)
    data = store.export_csv(args.session)
    Path(args.out).write_bytes(data)
    print(f"wrote {args.out} ({len(data)} bytes)")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    config = _load(args)
    index = None
    if args.demo:
        config.provider.mode = "mock"
        index = _demo_index(config)
    app = create_app(config, index=index, static_dir=args.static, persist_config=not args.demo)

    host, _, port_text = config.listen_addr.partition(":")
    host = args.host or host or "127.0.0.1"
    port = args.port or (int(port_text) if port_text else 8765)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def _demo_index(config: AppConfig) -> VectorIndex:
    """Tiny built-in corpus so the UI can be exercised with no credentials."""
    from .chunking import ChunkingParams, chunk_text
    from .embeddings import mock_embed
    from .vectorstore import VectorRecord

    corpus = {
        "DEMO0001": (
            "Solid-state batteries replace the liquid electrolyte with a ceramic "
            "conductor. Their energy density exceeds conventional lithium-ion cells. "
            "Dendrite growth remains the main failure mode under fast charging."
        ),
        "DEMO0002": (
            "Zebrafish embryos are transparent, which makes them ideal for imaging "
            "organ development in vivo. Their hearts begin beating about 24 hours "
            "after fertilization."
        ),
        "DEMO0003": (
            "Light roasted coffee retains more chlorogenic acids than dark roasts. "
            "Grind size controls extraction rate, and water at 93 degrees Celsius "
            "is a common brewing target."
        ),
    }
    params = ChunkingParams(chunk_size=200, chunk_overlap=20)
    index = VectorIndex()
    for doc_id, text in corpus.items():
        records = [
            VectorRecord(
                chunk_id=chunk.chunk_id,
                doc_id=chunk.doc_id,
                start_offset=chunk.start_offset,
                end_offset=chunk.end_offset,
                text=chunk.text,
                vector=mock_embed(chunk.text, config.provider.mock_dimension),
            )
            for chunk in chunk_text(text, doc_id, params)
        ]
        index.upsert(records)
    return index


if __name__ == "__main__":
    sys.exit(main())
