"""HTTP service for rating sessions, plus static hosting for the rating UI.

Endpoints (all JSON):
    POST /sessions                      {"items": [...], "checks": [...], "seed": int,
                                         "session_id": str?}      -> {"session_id"}
    GET  /sessions/{id}/batch?rater=R   -> {"batch_id", "cards": [10 x {"input",
                                            "label", "explanation"}]}
                                           or {"drained": true}
    POST /sessions/{id}/batch/{bid}     {"rater": str, "answers": [bool|null x 10]}
                                        -> {"status": "accepted"|"rejected"}
    GET  /sessions/{id}/report          -> {"he": float, "items": [...]}

Served batches never reveal which card is the attention check.  All state
mutations run under one lock and append their events to one log file per
session, so a restarted server replays the logs into identical state.
"""
from __future__ import annotations

import json
import mimetypes
import re
import threading
from hashlib import sha256
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .rating import (
    Batch,
    RatingError,
    SessionState,
    item_from_record,
    item_to_record,
)


class RatingService:
    """Session registry with write-through event persistence."""

    def __init__(self, log_dir: str | Path | None = None):
        self.log_dir = Path(log_dir) if log_dir else None
        self.sessions: dict[str, SessionState] = {}
        self._flushed: dict[str, int] = {}
        self.lock = threading.Lock()
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self._load_logs()

    def _load_logs(self) -> None:
        for path in sorted(self.log_dir.glob("*.events.jsonl")):
            events = [
                json.loads(line)
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            if not events:
                continue
            state = SessionState.replay(events)
            self.sessions[state.session_id] = state
            self._flushed[state.session_id] = len(events)

    def _persist(self, state: SessionState) -> None:
        if not self.log_dir:
            return
        done = self._flushed.get(state.session_id, 0)
        if done >= len(state.events):
            return
        path = self.log_dir / f"{state.session_id}.events.jsonl"
        with open(path, "a", encoding="utf-8", newline="\n") as f:
            for event in state.events[done:]:
                f.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
        self._flushed[state.session_id] = len(state.events)

    def create_session(self, payload: dict) -> str:
        if "seed" not in payload:
            raise RatingError("session payload requires a seed")
        session_id = payload.get("session_id")
        if not session_id:
            blob = json.dumps(payload, sort_keys=True).encode("utf-8")
            session_id = "s" + sha256(blob).hexdigest()[:10]
        with self.lock:
            if session_id in self.sessions:
                raise RatingError(f"session {session_id!r} already exists")
            state = SessionState.create(
                session_id,
                [item_from_record(r) for r in payload.get("items", [])],
                [item_from_record(r) for r in payload.get("checks", [])],
                payload["seed"],
            )
            self.sessions[session_id] = state
            self._persist(state)
        return session_id

    def next_batch(self, session_id: str, rater: str) -> Batch | None:
        with self.lock:
            state = self._session(session_id)
            batch = state.next_batch(rater)
            self._persist(state)
        return batch

    def submit_batch(self, session_id: str, batch_id: str, rater: str, answers) -> str:
        with self.lock:
            state = self._session(session_id)
            outcome = state.submit_batch(batch_id, rater, answers)
            self._persist(state)
        return outcome

    def report(self, session_id: str) -> dict:
        with self.lock:
            state = self._session(session_id)
            rows, he = state.aggregate()
        return {"he": he, "items": rows}

    def _session(self, session_id: str) -> SessionState:
        if session_id not in self.sessions:
            raise RatingError(f"unknown session {session_id!r}")
        return self.sessions[session_id]

    def batch_view(self, session_id: str, batch: Batch) -> dict:
        """The served shape of a batch; check cards are indistinguishable."""
        state = self._session(session_id)
        cards = []
        for card_id in batch.card_ids:
            item = state.items.get(card_id) or state.checks[card_id]
            record = item_to_record(item)
            cards.append(
                {
                    "input": record["input"],
                    "label": record["label"],
                    "explanation": record["explanation"],
                }
            )
        return {"batch_id": batch.id, "cards": cards}


_SESSION_BATCH = re.compile(r"^/sessions/([^/]+)/batch/([^/]+)$")
_SESSION_GET = re.compile(r"^/sessions/([^/]+)/(batch|report)$")


def make_handler(service: RatingService, static_dir: str | Path | None = None):
    static_root = Path(static_dir).resolve() if static_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):  # keep test output quiet
            pass

        def _json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _read_json(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length).decode("utf-8"))

        def do_GET(self):
            url = urlparse(self.path)
            m = _SESSION_GET.match(url.path)
            try:
                if m and m.group(2) == "batch":
                    rater = parse_qs(url.query).get("rater", [""])[0]
                    if not rater:
                        return self._json(400, {"error": "rater query parameter required"})
                    batch = service.next_batch(m.group(1), rater)
                    if batch is None:
                        return self._json(200, {"drained": True})
                    return self._json(200, service.batch_view(m.group(1), batch))
                if m and m.group(2) == "report":
                    return self._json(200, service.report(m.group(1)))
            except RatingError as err:
                status = 404 if "unknown" in str(err) else 409
                return self._json(status, {"error": str(err)})
            self._serve_static(url.path)

        def do_POST(self):
            url = urlparse(self.path)
            try:
                payload = self._read_json()
            except json.JSONDecodeError:
                return self._json(400, {"error": "request body is not valid JSON"})
            try:
                if url.path == "/sessions":
                    session_id = service.create_session(payload)
                    return self._json(201, {"session_id": session_id})
                m = _SESSION_BATCH.match(url.path)
                if m:
                    outcome = service.submit_batch(
                        m.group(1),
                        m.group(2),
                        payload.get("rater", ""),
                        payload.get("answers", []),
                    )
                    return self._json(200, {"status": outcome})
            except RatingError as err:
                text = str(err)
                if "unknown" in text:
                    return self._json(404, {"error": text})
                if "already" in text:
                    return self._json(409, {"error": text})
                return self._json(400, {"error": text})
            self._json(404, {"error": f"no such endpoint {url.path}"})

        def _serve_static(self, path: str) -> None:
            if static_root is None:
                return self._json(404, {"error": f"no such endpoint {path}"})
            rel = path.lstrip("/") or "index.html"
            target = (static_root / rel).resolve()
            if static_root not in target.parents and target != static_root:
                return self._json(404, {"error": "not found"})
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                return self._json(404, {"error": "not found"})
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            body = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


def make_server(
    port: int = 0,
    log_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> tuple[ThreadingHTTPServer, RatingService]:
    service = RatingService(log_dir=log_dir)
    handler = make_handler(service, static_dir=static_dir)
    httpd = ThreadingHTTPServer((host, port), handler)
    return httpd, service
