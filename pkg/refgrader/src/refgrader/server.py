"""Wire-protocol server around a loaded model bundle."""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .bundle import GraderModelBundle
from .inference import grade_texts
from .protocol import GRADE_PATH, ProtocolError

log = logging.getLogger("refgrader.server")


class GradeHandler(BaseHTTPRequestHandler):
    bundle: GraderModelBundle
    lock: threading.Lock

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:  # noqa: N802 - http.server API
        if self.path != GRADE_PATH:
            self._reply(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            texts = payload.get("texts") if isinstance(payload, dict) else None
            with self.lock:
                distributions = grade_texts(self.bundle, texts)  # validates texts
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._reply(400, {"error": "malformed JSON body"})
            return
        except ProtocolError as exc:
            self._reply(400, {"error": str(exc)})
            return
        except Exception as exc:
            log.exception("inference failed")
            self._reply(500, {"error": f"model failure: {exc}"})
            return
        self._reply(200, {"model_id": self.bundle.model_id, "distributions": distributions})

    def do_GET(self) -> None:  # noqa: N802
        if self.path == GRADE_PATH:
            self._reply(405, {"error": "use POST"})
        else:
            self._reply(404, {"error": f"unknown path {self.path}"})

    do_PUT = do_DELETE = do_PATCH = do_GET

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)


def make_server(bundle: GraderModelBundle, port: int, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    handler = type(
        "BoundGradeHandler", (GradeHandler,), {"bundle": bundle, "lock": threading.Lock()}
    )
    return ThreadingHTTPServer((host, port), handler)


def serve(bundle: GraderModelBundle, port: int, host: str = "127.0.0.1") -> None:
    server = make_server(bundle, port, host)
    address = f"http://{server.server_address[0]}:{server.server_address[1]}"
    print(f"{bundle.model_id} listening on {address}{GRADE_PATH}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
