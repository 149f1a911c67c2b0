"""JSON-over-HTTP wire protocol for the annotation service.

Endpoints (bodies and responses are plain JSON; errors carry
``{"code", "message"}``):

* ``POST /sessions`` with ``{"annotator_id", "sample_ids", "k"?}``
* ``GET  /sessions/{id}/view``
* ``POST /sessions/{id}/expand``
* ``POST /sessions/{id}/entity-types``
* ``POST /sessions/{id}/submit`` with ``{"label"}``
* ``GET  /annotations/export?annotator=...``
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .annotation import AnnotationError, AnnotationService

_STATUS_BY_CODE = {
    "bad_request": 400,
    "label_not_offered": 400,
    "unknown_sample": 404,
    "unknown_session": 404,
    "end_of_session": 409,
    "duplicate_submission": 409,
}

_SESSION_ROUTE = re.compile(r"^/sessions/(?P<sid>[A-Za-z0-9_-]+)/(?P<action>view|expand|entity-types|submit)$")


class _Handler(BaseHTTPRequestHandler):
    service: AnnotationService  # set by make_server on the handler class

    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # quiet by default; CLI enables access logs
        if getattr(self.server, "verbose", False):
            super().log_message(format, *args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send(status, {"code": code, "message": message})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise AnnotationError("bad_request", f"invalid JSON body: {exc.msg}") from exc
        if not isinstance(payload, dict):
            raise AnnotationError("bad_request", "request body must be a JSON object")
        return payload

    def _dispatch(self, method: str) -> None:
        url = urlparse(self.path)
        try:
            if method == "POST" and url.path == "/sessions":
                body = self._body()
                if "annotator_id" not in body or "sample_ids" not in body:
                    raise AnnotationError("bad_request", "annotator_id and sample_ids are required")
                session = self.service.start_session(
                    body["annotator_id"], list(body["sample_ids"]), body.get("k")
                )
                self._send(201, self.service.get_view(session.session_id))
                return
            if method == "GET" and url.path == "/annotations/export":
                annotator = parse_qs(url.query).get("annotator", [None])[0]
                records = self.service.store.records(annotator)
                self._send(200, {"records": [r.to_record() for r in records]})
                return
            match = _SESSION_ROUTE.match(url.path)
            if match is None:
                self._error(404, "not_found", f"no route for {method} {url.path}")
                return
            sid, action = match.group("sid"), match.group("action")
            if action == "view" and method == "GET":
                self._send(200, self.service.get_view(sid))
            elif action == "expand" and method == "POST":
                self._send(200, self.service.expand(sid))
            elif action == "entity-types" and method == "POST":
                self._send(200, self.service.reveal_entity_types(sid))
            elif action == "submit" and method == "POST":
                body = self._body()
                if "label" not in body:
                    raise AnnotationError("bad_request", "label is required")
                record = self.service.submit(sid, body["label"])
                self._send(200, {"record": record.to_record(), "view": self.service.get_view(sid)})
            else:
                self._error(405, "method_not_allowed", f"{method} not allowed on {url.path}")
        except AnnotationError as exc:
            self._error(_STATUS_BY_CODE.get(exc.code, 400), exc.code, exc.message)
        except Exception as exc:  # keep the server alive; surface the failure
            self._error(500, "internal_error", str(exc))

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_server(service: AnnotationService, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Bind the service to a local socket; port 0 picks a free port."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve_in_thread(service: AnnotationService, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns (server, base_url)."""
    server = make_server(service, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://{server.server_address[0]}:{server.server_address[1]}"
