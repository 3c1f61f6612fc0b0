import json
import shutil
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import pytest

from corona_ner.corpus_io import Sentence
from corona_ner.kb import ENDPOINT_ENV

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _no_endpoint_override(monkeypatch):
    monkeypatch.delenv(ENDPOINT_ENV, raising=False)


@pytest.fixture
def golden_dir(tmp_path):
    dst = tmp_path / "golden"
    shutil.copytree(FIXTURES / "golden", dst, ignore=shutil.ignore_patterns("expected", "out"))
    return dst


def sentence(words, sent_id="s0", pos=None):
    """Sentence built from pre-split words joined by single spaces."""
    text = " ".join(words)
    sent = Sentence.from_text(sent_id, text)
    assert sent.words == list(words), "test words must not need punctuation splitting"
    if pos is not None:
        sent = sent.with_pos(pos)
    return sent


class FakeSparql:
    """Local SPARQL endpoint answering from a substring -> rows table."""

    def __init__(self):
        self.answers = {}
        self.hits = 0
        self.status = 200
        self.raw_body = None
        fake = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                fake.hits += 1
                query = parse_qs(urlparse(self.path).query).get("query", [""])[0]
                if fake.status != 200:
                    self.send_response(fake.status)
                    self.end_headers()
                    return
                if fake.raw_body is not None:
                    body = fake.raw_body.encode()
                else:
                    rows = []
                    for needle, answer in fake.answers.items():
                        if needle in query:
                            rows = answer
                            break
                    body = json.dumps({"head": {"vars": []}, "results": {"bindings": rows}}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/sparql-results+json")
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/sparql"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def sparql():
    fake = FakeSparql()
    yield fake
    fake.close()


@pytest.fixture
def dead_endpoint():
    import socket
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return f"http://127.0.0.1:{port}/sparql"
