import copy
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

MINIMAL_SCENARIO = {
    "name": "mini",
    "environment_kind": "street",
    "condition": "MDC",
    "goal": "walk to the far end of the street",
    "duration_s": 10.0,
    "seed": 1,
    "objects": [
        {
            "id": "sign_1",
            "label": "street sign",
            "center": [0.0, 10.0, 1.6],
            "radius": 0.5,
            "tags": ["signage"],
            "salience": 0.5,
        }
    ],
    "body_trajectory": [
        {"t": 0.0, "position": [0.0, 0.0, 1.6], "facing_yaw": 0.0},
        {"t": 10.0, "position": [0.0, 10.0, 1.6], "facing_yaw": 0.0},
    ],
}


def scenario_dict(**overrides):
    d = copy.deepcopy(MINIMAL_SCENARIO)
    d.update(overrides)
    return d


@pytest.fixture
def minimal_scenario_dict():
    return scenario_dict()


def chat_body(content) -> bytes:
    """Chat-completion envelope whose message content is ``content`` as JSON text."""
    text = content if isinstance(content, str) else json.dumps(content)
    return json.dumps({"choices": [{"message": {"role": "assistant", "content": text}}]}).encode()


class StubServer:
    """Local HTTP server that plays back a queue of (status, body) replies."""

    def __init__(self):
        self.replies = []
        self.default = (200, chat_body({}))
        self.requests = []
        self.arrivals = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                stub.arrivals.append(time.monotonic())
                length = int(self.headers.get("Content-Length", 0))
                stub.requests.append(
                    {"body": json.loads(self.rfile.read(length)), "headers": dict(self.headers)}
                )
                status, body = stub.replies.pop(0) if stub.replies else stub.default
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.httpd.server_address[1]}/v1/chat/completions"
        self.thread = threading.Thread(target=self.httpd.serve_forever, kwargs={"poll_interval": 0.02}, daemon=True)

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def stub_server():
    with StubServer() as server:
        yield server


# one "PASS/FAIL criterion N: ..." line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
