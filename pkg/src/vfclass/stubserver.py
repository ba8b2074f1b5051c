"""Deterministic embedding service for tests and offline demos.

Serves the remote-provider HTTP contract with hash-derived vectors: the
same (input, modality) pair always yields the same unit vector, so runs
against the stub are exactly reproducible and can be compared against a
pre-dumped binary store of the same vectors.
"""

from __future__ import annotations

import contextlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .embedding import hashed_vector


class _StubHandler(BaseHTTPRequestHandler):
    dim = 64

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", 0))
            body = json.loads(self.rfile.read(length))
            inputs = body["inputs"]
            modality = body.get("modality", "text")
            if modality not in ("text", "image") or not isinstance(inputs, list):
                raise ValueError("bad request")
            vectors = [
                hashed_vector(str(item), modality, self.dim).tolist()
                for item in inputs
            ]
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            payload = json.dumps({"error": str(exc)}).encode()
            self.send_response(400)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)
            return
        payload = json.dumps({"dim": self.dim, "vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, fmt, *args):  # keep test output quiet
        pass


def make_server(host: str, port: int, dim: int) -> ThreadingHTTPServer:
    handler = type("Handler", (_StubHandler,), {"dim": dim})
    return ThreadingHTTPServer((host, port), handler)


def serve(host: str = "127.0.0.1", port: int = 8765, dim: int = 64) -> None:
    """Run the stub service until interrupted."""
    server = make_server(host, port, dim)
    try:
        server.serve_forever()
    finally:
        server.server_close()


@contextlib.contextmanager
def running_stub(dim: int = 64, host: str = "127.0.0.1"):
    """Start the stub on a free port in a thread; yields its base URL."""
    server = make_server(host, 0, dim)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://{host}:{server.server_address[1]}/"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
