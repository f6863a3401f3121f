import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from wozgen import (
    SynthesisJob,
    default_schema,
    demo_kb,
    demo_templates,
    synthesize,
)
from wozgen.surrogate import OracleLabelerBackend, SurrogateCollectorBackend


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def kb(schema):
    return demo_kb(schema)


@pytest.fixture(scope="session")
def templates(schema):
    return demo_templates(schema)


@pytest.fixture(scope="session")
def collector(schema):
    return SurrogateCollectorBackend(schema)


@pytest.fixture(scope="session")
def labeler(schema):
    return OracleLabelerBackend(schema)


@pytest.fixture(scope="session")
def small_corpus(schema, kb, templates, collector, labeler):
    """A 12-dialogue surrogate corpus reused by read-only tests."""
    job = SynthesisJob(templates=templates, kb=kb, target_count=12, seed=11)
    return synthesize(job, collector, labeler, schema).corpus


class _StubHandler(BaseHTTPRequestHandler):
    """Routes POSTs through server.routes and records every request."""

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length) or b"{}")
        self.server.requests.append((self.path, payload))
        status, body = self.server.routes[self.path](payload)
        data = body if isinstance(body, bytes) else json.dumps(body).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub():
    """A local scriptable model service speaking the wire protocol."""
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    server.routes = {}
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    server.base_url = f"http://127.0.0.1:{server.server_address[1]}"
    try:
        yield server
    finally:
        server.shutdown()
        thread.join(timeout=5)
