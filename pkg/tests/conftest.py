"""Shared pytest fixtures; plain helpers live in helpers.py."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from reprocheck.checklist import default_schema


@pytest.fixture(scope="session")
def schema():
    return default_schema()


class LocalHttpServer:
    """Loopback HTTP server whose routes the test registers per path."""

    def __init__(self):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                pass

            def _dispatch(self):
                outer.requests.append((self.command, self.path))
                route = outer.routes.get(self.path.split("?", 1)[0])
                if route is None:
                    self.send_error(404, "no such route")
                    return
                route(self)

            do_GET = _dispatch
            do_HEAD = _dispatch
            do_POST = _dispatch

        self.routes = {}
        self.requests = []
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.port = self._httpd.server_address[1]
        threading.Thread(target=self._httpd.serve_forever, daemon=True).start()

    def url(self, path="/"):
        return f"http://127.0.0.1:{self.port}{path}"

    def serve_bytes(self, path, payload, status=200,
                    content_type="application/octet-stream", headers=None):
        def route(handler):
            handler.send_response(status)
            handler.send_header("Content-Type", content_type)
            handler.send_header("Content-Length", str(len(payload)))
            for key, value in (headers or {}).items():
                handler.send_header(key, value)
            handler.end_headers()
            if handler.command != "HEAD":
                handler.wfile.write(payload)

        self.routes[path] = route

    def serve_json(self, path, doc, status=200):
        self.serve_bytes(
            path, json.dumps(doc).encode(), status=status, content_type="application/json"
        )

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def http_server():
    server = LocalHttpServer()
    yield server
    server.close()


@pytest.fixture
def corpus(tmp_path, schema):
    from helpers import make_corpus

    return make_corpus(tmp_path / "corpus", schema)
