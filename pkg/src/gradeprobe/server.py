"""Wire-protocol HTTP server backed by the mock rubric grader.

POST /v1/grade with {"texts": [...]} returns {"model_id", "distributions"}.
400 covers empty lists, oversize texts, and malformed bodies; 405 covers
non-POST methods on the grade path; anything unexpected maps to 500.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import GraderInputError
from .grader import CachingGrader, MockGrader, MockRubricConfig

log = logging.getLogger("gradeprobe.server")

GRADE_PATH = "/v1/grade"


class MockGradeHandler(BaseHTTPRequestHandler):
    grader: CachingGrader  # set by make_mock_server

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
            raw = self.rfile.read(length)
            payload = json.loads(raw.decode("utf-8"))
            texts = payload.get("texts") if isinstance(payload, dict) else None
            if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                self._reply(400, {"error": "body must be {\"texts\": [\"...\"]}"})
                return
            distributions = self.grader.grade(texts)
        except (json.JSONDecodeError, UnicodeDecodeError, ValueError):
            self._reply(400, {"error": "malformed JSON body"})
            return
        except GraderInputError as exc:
            self._reply(400, {"error": str(exc)})
            return
        except Exception as exc:  # model failure
            log.exception("grading failed")
            self._reply(500, {"error": f"model failure: {exc}"})
            return
        self._reply(
            200,
            {
                "model_id": self.grader.model_id,
                "distributions": [list(d.probs) for d in distributions],
            },
        )

    def do_GET(self) -> None:  # noqa: N802
        if self.path == GRADE_PATH:
            self._reply(405, {"error": "use POST"})
        else:
            self._reply(404, {"error": f"unknown path {self.path}"})

    do_PUT = do_DELETE = do_PATCH = do_GET

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)


def make_mock_server(
    port: int, host: str = "127.0.0.1", cfg: MockRubricConfig | None = None
) -> ThreadingHTTPServer:
    """Build (but do not start) the threaded mock grading server."""
    handler = type(
        "BoundMockGradeHandler",
        (MockGradeHandler,),
        {"grader": CachingGrader(MockGrader(cfg))},
    )
    return ThreadingHTTPServer((host, port), handler)


def serve_mock(port: int, host: str = "127.0.0.1") -> None:
    server = make_mock_server(port, host)
    address = f"http://{server.server_address[0]}:{server.server_address[1]}"
    print(f"mock grader listening on {address}{GRADE_PATH}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
