"""CLI tests: each verb exercised in-process against the mock servers."""

import csv
import io

import pytest
from fastapi.testclient import TestClient

from kzb.cli import main
from kzb.prompts import REFUSAL_SENTENCE
from kzb.sessions import SessionStore
from kzb.vectorstore import VectorIndex

from conftest import OFF_TOPIC_QUESTION, PLANTED_QUESTION

ZOTERO_SECRET = "good-key"


@pytest.fixture
def data_dir(tmp_path):
    return tmp_path / "data"


@pytest.fixture
def configured(data_dir, corpus_zotero, capsys):
    """Run `kzb configure` against the corpus mock, return the data dir."""
    code = main([
        "configure",
        "--data-dir", str(data_dir),
        "--library-type", "user",
        "--library-id", "1",
        "--zotero-api-key", ZOTERO_SECRET,
        "--zotero-api-base", corpus_zotero.base_url,
        "--mode", "mock",
        "--chunk-size", "200",
        "--chunk-overlap", "20",
    ])
    assert code == 0
    capsys.readouterr()  # drop configure output from later assertions
    return data_dir


def run_ingested(configured, capsys):
    assert main(["ingest", "--data-dir", str(configured)]) == 0
    capsys.readouterr()
    return configured


# --- configure ---


def test_configure_writes_toml_and_redacts_output(data_dir, corpus_zotero, capsys):
    code = main([
        "configure",
        "--data-dir", str(data_dir),
        "--library-id", "1",
        "--zotero-api-key", ZOTERO_SECRET,
        "--zotero-api-base", corpus_zotero.base_url,
        "--mode", "mock",
    ])
    out, err = capsys.readouterr()
    assert code == 0
    assert "wrote" in out and "kzb.toml" in out
    assert "zotero.api_key = ***" in out
    assert ZOTERO_SECRET not in out and ZOTERO_SECRET not in err
    saved = (data_dir / "kzb.toml").read_text(encoding="utf-8")
    assert f'api_key = "{ZOTERO_SECRET}"' in saved


def test_configure_rejects_bad_chunking(data_dir, capsys):
    code = main([
        "configure", "--data-dir", str(data_dir),
        "--chunk-size", "100", "--chunk-overlap", "200",
    ])
    out, err = capsys.readouterr()
    assert code == 1
    assert "error (invalid_params)" in err


def test_no_command_prints_help(capsys):
    assert main([]) == 2
    out, _ = capsys.readouterr()
    assert "configure" in out and "ingest" in out and "serve" in out


# --- ingest ---


def test_ingest_builds_index(configured, capsys):
    code = main(["ingest", "--data-dir", str(configured)])
    out, _ = capsys.readouterr()
    assert code == 0
    assert "state: done" in out
    assert "documents found:     3" in out
    assert (configured / "index.kzb").exists()
    assert VectorIndex.load(configured / "index.kzb").size >= 3


def test_ingest_failure_exits_nonzero(configured, corpus_zotero, capsys):
    corpus_zotero.state.fail_next(403, times=10)
    code = main(["ingest", "--data-dir", str(configured)])
    out, err = capsys.readouterr()
    assert code == 1
    assert "state: failed" in out
    assert ZOTERO_SECRET not in out and ZOTERO_SECRET not in err


# --- ask ---


def test_ask_answers_and_cites(configured, capsys):
    run_ingested(configured, capsys)
    code = main(["ask", PLANTED_QUESTION, "--data-dir", str(configured)])
    out, err = capsys.readouterr()
    assert code == 0
    assert "451" in out
    assert "[1] BBB22222#" in out and "score" in out
    assert ZOTERO_SECRET not in out and ZOTERO_SECRET not in err


def test_ask_refuses_off_topic(configured, capsys):
    run_ingested(configured, capsys)
    code = main(["ask", OFF_TOPIC_QUESTION, "--data-dir", str(configured)])
    out, _ = capsys.readouterr()
    assert code == 0
    assert REFUSAL_SENTENCE in out
    assert "[1]" not in out  # no citations on a refusal


def test_ask_without_index_fails(configured, capsys):
    code = main(["ask", "anything", "--data-dir", str(configured)])
    _, err = capsys.readouterr()
    assert code == 1
    assert "no index found" in err


def test_ask_continues_a_session(configured, capsys):
    run_ingested(configured, capsys)
    main(["ask", PLANTED_QUESTION, "--data-dir", str(configured)])
    capsys.readouterr()
    store = SessionStore(configured / "sessions")
    (session_id,) = store.list_sessions()
    code = main(["ask", OFF_TOPIC_QUESTION, "--session", session_id, "--data-dir", str(configured)])
    assert code == 0
    turns = store.get_history(session_id)
    assert [t.role for t in turns] == ["user", "assistant", "user", "assistant"]
    assert turns[0].content == PLANTED_QUESTION
    assert turns[2].content == OFF_TOPIC_QUESTION


# --- chat ---


def test_chat_loop_round_trip(configured, capsys, monkeypatch):
    run_ingested(configured, capsys)
    lines = iter([PLANTED_QUESTION, "exit"])
    monkeypatch.setattr("builtins.input", lambda prompt="": next(lines))
    code = main(["chat", "--data-dir", str(configured)])
    out, _ = capsys.readouterr()
    assert code == 0
    assert "session" in out
    assert "451" in out


def test_chat_eof_exits_cleanly(configured, capsys, monkeypatch):
    run_ingested(configured, capsys)

    def raise_eof(prompt=""):
        raise EOFError

    monkeypatch.setattr("builtins.input", raise_eof)
    assert main(["chat", "--data-dir", str(configured)]) == 0


# --- export ---


def test_export_writes_store_identical_csv(configured, tmp_path, capsys):
    run_ingested(configured, capsys)
    main(["ask", PLANTED_QUESTION, "--data-dir", str(configured)])
    store = SessionStore(configured / "sessions")
    (session_id,) = store.list_sessions()
    out_path = tmp_path / "history.csv"
    code = main([
        "export", "--session", session_id, "--out", str(out_path),
        "--data-dir", str(configured),
    ])
    assert code == 0
    assert out_path.read_bytes() == store.export_csv(session_id)
    rows = list(csv.reader(io.StringIO(out_path.read_text(encoding="utf-8"), newline="")))
    assert rows[0] == ["turn_index", "timestamp", "role", "content", "citations"]
    assert len(rows) == 3
    assert ZOTERO_SECRET not in out_path.read_text(encoding="utf-8")


def test_export_unknown_session_fails(configured, tmp_path, capsys):
    code = main([
        "export", "--session", "missing", "--out", str(tmp_path / "x.csv"),
        "--data-dir", str(configured),
    ])
    _, err = capsys.readouterr()
    assert code == 1
    assert "error (unknown_session)" in err


# --- serve ---


def test_serve_demo_starts_with_sample_index(configured, monkeypatch):
    captured = {}

    def fake_run(app, **kwargs):
        captured["app"] = app
        captured.update(kwargs)

    monkeypatch.setattr("uvicorn.run", fake_run)
    code = main(["serve", "--demo", "--data-dir", str(configured)])
    assert code == 0
    assert captured["host"] == "127.0.0.1"
    assert captured["port"] == 8765
    with TestClient(captured["app"]) as tc:
        health = tc.get("/api/health").json()
        assert health["status"] == "ok"
        assert health["index_size"] > 0
        sid = tc.post("/api/sessions").json()["session_id"]
        body = tc.post(
            f"/api/sessions/{sid}/chat",
            json={"question": "what temperature is a common brewing target?"},
        ).json()
        assert body["refused"] is False
        assert "93" in body["text"]


def test_serve_custom_port(configured, monkeypatch):
    captured = {}
    monkeypatch.setattr("uvicorn.run", lambda app, **kw: captured.update(kw))
    assert main(["serve", "--demo", "--port", "9100", "--data-dir", str(configured)]) == 0
    assert captured["port"] == 9100
    assert captured["host"] == "127.0.0.1"
