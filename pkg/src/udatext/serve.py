"""Minimal JSON prediction endpoint: ``POST /predict`` and ``GET /healthz``."""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .classifiers.persist import load_model
from .errors import ContractError
from .pipeline import Featurizer, predict_text

log = logging.getLogger(__name__)

DEFAULT_K = 3
MAX_BODY = 1 << 20


class PredictionService:
    """Holds a model and its featurizer; arrays are frozen read-only."""

    def __init__(self, model, featurizer: Featurizer):
        for name in ("W", "b", "base_score"):
            arr = getattr(model, name, None)
            if arr is not None:
                arr.setflags(write=False)
        self.model = model
        self.featurizer = featurizer

    @classmethod
    def from_model_file(cls, path):
        model = load_model(path)
        if model.featurizer is None:
            raise ContractError(f"{path}: model file records no featurizer")
        return cls(model, Featurizer(model.featurizer, base_dir=Path(path).parent))

    def predict(self, text: str, k: int = DEFAULT_K) -> list:
        return [{"label": c, "score": s} for c, s in predict_text(self.model, self.featurizer, text, k)]


def _parse_request(raw: bytes):
    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, ValueError):
        raise ValueError("body must be JSON") from None
    if not isinstance(body, dict):
        raise ValueError("body must be a JSON object")
    text = body.get("text")
    if not isinstance(text, str) or not text.strip():
        raise ValueError("'text' must be a nonempty string")
    k = body.get("k", DEFAULT_K)
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValueError("'k' must be a positive integer")
    return text, k


def make_handler(service: PredictionService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _send(self, status, payload):
            data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/healthz":
                self._send(HTTPStatus.OK, {"status": "ok"})
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": "not found"})

        def do_POST(self):
            if self.path != "/predict":
                self._send(HTTPStatus.NOT_FOUND, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
            except ValueError:
                length = -1
            if not 0 <= length <= MAX_BODY:
                self._send(HTTPStatus.BAD_REQUEST, {"error": "bad Content-Length"})
                return
            try:
                text, k = _parse_request(self.rfile.read(length))
            except ValueError as exc:
                self._send(HTTPStatus.BAD_REQUEST, {"error": str(exc)})
                return
            self._send(HTTPStatus.OK, {"predictions": service.predict(text, k)})

        def log_message(self, fmt, *args):
            log.debug("%s - %s", self.address_string(), fmt % args)

    return Handler


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    request_queue_size = 128  # the stdlib default of 5 resets bursts of concurrent clients


def make_server(service: PredictionService, host="127.0.0.1", port=8000) -> ThreadingHTTPServer:
    return _Server((host, port), make_handler(service))


def serve_in_thread(service, host="127.0.0.1", port=0):
    """Start a server on a background thread; returns ``(server, thread)``."""
    server = make_server(service, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
