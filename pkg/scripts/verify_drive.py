"""End-to-end drive of the installed kzb CLI + HTTP server over real sockets.

Starts the bundled mock Zotero library, runs `kzb configure`/`ingest`/`ask`/
`export` as real subprocesses, then boots `kzb serve` and walks every HTTP
endpoint with plain requests. Exits nonzero on the first broken expectation.
"""

import csv
import io
import json
import re
import socket
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import requests

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from conftest import CORPUS, PLANTED_DOC, PLANTED_QUESTION, OFF_TOPIC_QUESTION, build_pdf

from kzb.testing import MockZoteroServer

SECRET = "good-key"


def check(label, condition, detail=""):
    if not condition:
        print(f"FAIL {label} {detail}")
        sys.exit(1)
    print(f"ok   {label}")


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def run_cli(*args) -> subprocess.CompletedProcess:
    return subprocess.run(["kzb", *args], capture_output=True, text=True, timeout=120)


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="kzb-verify-"))
    data_dir = workdir / "data"

    with MockZoteroServer() as zotero:
        for doc_id, (title, lines) in CORPUS.items():
            zotero.state.add_pdf(doc_id, title, build_pdf([lines]))

        # CLI: configure -> ingest -> ask -> export
        configure = run_cli(
            "configure", "--data-dir", str(data_dir),
            "--library-type", "user", "--library-id", "1",
            "--zotero-api-key", SECRET, "--zotero-api-base", zotero.base_url,
            "--mode", "mock", "--chunk-size", "200", "--chunk-overlap", "20",
        )
        check("cli configure", configure.returncode == 0, configure.stderr)
        check("cli configure redacts", SECRET not in configure.stdout + configure.stderr)

        ingest = run_cli("ingest", "--data-dir", str(data_dir))
        check("cli ingest", ingest.returncode == 0 and "state: done" in ingest.stdout, ingest.stdout)

        ask = run_cli("ask", PLANTED_QUESTION, "--data-dir", str(data_dir))
        check("cli ask planted fact", ask.returncode == 0 and "451" in ask.stdout, ask.stdout)
        check("cli ask cites", PLANTED_DOC in ask.stdout)

        refuse = run_cli("ask", OFF_TOPIC_QUESTION, "--data-dir", str(data_dir))
        check("cli ask refusal", "I apologize, but I do not have any information" in refuse.stdout)

        sessions = sorted(p.stem for p in (data_dir / "sessions").glob("*.jsonl"))
        out_csv = workdir / "history.csv"
        export = run_cli("export", "--session", sessions[0], "--out", str(out_csv),
                         "--data-dir", str(data_dir))
        check("cli export", export.returncode == 0 and out_csv.exists())
        rows = list(csv.reader(io.StringIO(out_csv.read_text(), newline="")))
        check("cli export parses", rows[0][0] == "turn_index" and len(rows) == 3, rows)

        # HTTP: boot the real server and walk the API
        port = free_port()
        server = subprocess.Popen(
            ["kzb", "serve", "--data-dir", str(data_dir), "--port", str(port)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
        )
        try:
            base = f"http://127.0.0.1:{port}"
            for _ in range(100):
                try:
                    requests.get(f"{base}/api/health", timeout=1)
                    break
                except requests.ConnectionError:
                    time.sleep(0.1)

            health = requests.get(f"{base}/api/health").json()
            check("http health", health["status"] == "ok" and health["index_size"] > 0, health)

            view = requests.get(f"{base}/api/config").json()
            check("http config redacted", view["zotero"]["api_key"] == "***", view)

            accepted = requests.post(f"{base}/api/ingest")
            check("http ingest 202", accepted.status_code == 202, accepted.text)
            for _ in range(200):
                status = requests.get(f"{base}/api/ingest/status").json()
                if status["state"] in ("done", "failed"):
                    break
                time.sleep(0.05)
            check("http ingest done", status["state"] == "done" and status["docs_found"] == 3, status)

            sid = requests.post(f"{base}/api/sessions").json()["session_id"]
            answer = requests.post(f"{base}/api/sessions/{sid}/chat",
                                   json={"question": PLANTED_QUESTION}).json()
            check("http chat planted", "451" in answer["text"], answer)
            check("http chat cites", answer["citations"][0]["doc_id"] == PLANTED_DOC)

            refusal = requests.post(f"{base}/api/sessions/{sid}/chat",
                                    json={"question": OFF_TOPIC_QUESTION}).json()
            check("http chat refusal", refusal["refused"] is True and refusal["citations"] == [])

            history = requests.get(f"{base}/api/sessions/{sid}/history").json()
            check("http history", [t["role"] for t in history["turns"]] == ["user", "assistant"] * 2)

            export_resp = requests.get(f"{base}/api/sessions/{sid}/export.csv")
            check("http export headers",
                  export_resp.headers["content-type"].startswith("text/csv")
                  and f"kzb-history-{sid}.csv" in export_resp.headers["content-disposition"])
            exported = list(csv.reader(io.StringIO(export_resp.text, newline="")))
            check("http export rows", len(exported) == 5, exported)

            missing = requests.get(f"{base}/api/sessions/absent/history")
            check("http error envelope",
                  missing.status_code == 404 and missing.json()["error"]["code"] == "unknown_session")

            blob = json.dumps([health, view, status, answer, refusal, history]) + export_resp.text
            check("http secrecy", SECRET not in blob)
        finally:
            server.terminate()
            server.wait(timeout=10)

        dist = Path(__file__).resolve().parent.parent / "frontend" / "dist"
        if dist.is_dir():
            drive_ui(dist, data_dir)
        else:
            print("skip ui checks: frontend/dist not built")

    print("VERIFY PASS: CLI, HTTP, and UI surfaces drove end to end")


def drive_ui(dist: Path, data_dir: Path) -> None:
    """Serve the built frontend and replay the wizard's own request sequence."""
    port = free_port()
    server = subprocess.Popen(
        ["kzb", "serve", "--data-dir", str(data_dir), "--port", str(port),
         "--static", str(dist)],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
    )
    try:
        base = f"http://127.0.0.1:{port}"
        for _ in range(100):
            try:
                requests.get(f"{base}/api/health", timeout=1)
                break
            except requests.ConnectionError:
                time.sleep(0.1)

        page = requests.get(f"{base}/")
        check("ui index served", page.status_code == 200 and 'id="app"' in page.text, page.text[:200])
        js_path = re.search(r'src="(/assets/index-[^"]+\.js)"', page.text)
        css_path = re.search(r'href="(/assets/index-[^"]+\.css)"', page.text)
        check("ui assets referenced", js_path is not None and css_path is not None, page.text[:400])
        js = requests.get(f"{base}{js_path.group(1)}")
        check("ui js served", js.status_code == 200 and "Setting up Zotero" in js.text)
        css = requests.get(f"{base}{css_path.group(1)}")
        check("ui css served", css.status_code == 200 and ".citation-chip" in css.text)

        # exactly what the zotero form posts; a bad key must map to 403
        bad = requests.post(f"{base}/api/config", json={
            "validate_zotero": True,
            "zotero": {"library_type": "user", "library_id": "1",
                       "api_key": "wrong-key", "collection_id": ""},
        })
        check("ui bad key 403", bad.status_code == 403
              and bad.json()["error"]["code"] == "auth_failed", bad.text)
        good = requests.post(f"{base}/api/config", json={
            "validate_zotero": True,
            "zotero": {"library_type": "user", "library_id": "1",
                       "api_key": SECRET, "collection_id": ""},
        })
        check("ui zotero payload accepted", good.status_code == 200
              and good.json()["zotero"]["api_key"] == "***", good.text)

        # exactly what the openai form posts, then the ingest it triggers
        prov = requests.post(f"{base}/api/config", json={
            "provider": {"api_key": "", "chat_model": "gpt-4"},
            "chunking": {"chunk_size": 200, "chunk_overlap": 20},
        })
        check("ui openai payload accepted", prov.status_code == 200, prov.text)
        accepted = requests.post(f"{base}/api/ingest")
        check("ui ingest accepted", accepted.status_code == 202, accepted.text)
        for _ in range(200):
            status = requests.get(f"{base}/api/ingest/status").json()
            if status["state"] in ("done", "failed"):
                break
            time.sleep(0.05)
        check("ui ingest done", status["state"] == "done", status)

        # the chat panel flow: session, question, download filename
        sid = requests.post(f"{base}/api/sessions").json()["session_id"]
        answer = requests.post(f"{base}/api/sessions/{sid}/chat",
                               json={"question": PLANTED_QUESTION}).json()
        check("ui chat grounded", "451" in answer["text"] and len(answer["citations"]) >= 1, answer)
        export_resp = requests.get(f"{base}/api/sessions/{sid}/export.csv")
        check("ui download filename",
              f'kzb-history-{sid}.csv' in export_resp.headers["content-disposition"])
        check("ui secrecy", SECRET not in page.text + js.text + css.text + good.text + prov.text)
    finally:
        server.terminate()
        server.wait(timeout=10)


if __name__ == "__main__":
    main()
