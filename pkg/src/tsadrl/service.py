"""Annotation service: a small threaded HTTP server exposing pending label
queries, accepting answers, and serving series slices plus a static UI.

Endpoints (all JSON):
  GET  /api/status              counts and series inventory
  GET  /api/queries             pending queries, most uncertain first
  POST /api/labels              {"series", "t", "label": 0|1|"skip"}
  GET  /api/series/<id>?from=&to=   values and known labels for a range

Ground-truth labels are never exposed; annotators only see values and
previously recorded answers.
"""

from __future__ import annotations

import json
import mimetypes
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .active import LabelRecord, LabelStore, Query
from .data import Series
from .errors import InvalidArgs

MAX_BODY_BYTES = 1 << 20


class AnnotationState:
    """Shared, lock-guarded view of series, pending queries, and labels."""

    def __init__(self, series_list: list[Series], store: LabelStore, n_steps: int,
                 labels_path: str | None = None):
        self._lock = threading.RLock()
        self.series = {s.id: s for s in series_list}
        self.store = store
        self.n_steps = int(n_steps)
        self.labels_path = labels_path
        self._pending: dict[tuple[str, int], Query] = {}

    def set_queries(self, queries: list[Query]) -> None:
        with self._lock:
            self._pending = {(q.series, q.t): q for q in queries}

    def pending(self) -> list[Query]:
        with self._lock:
            return sorted(self._pending.values(), key=lambda q: (q.margin, q.series, q.t))

    def pending_count(self) -> int:
        with self._lock:
            return len(self._pending)

    def submit(self, series_id: str, t: int, label) -> tuple[int, dict]:
        """Record one answer; returns (http_status, payload)."""
        series = self.series.get(series_id)
        if series is None:
            return 404, {"error": f"unknown series {series_id!r}"}
        if not self.n_steps - 1 <= t < series.length:
            return 404, {"error": f"t={t} outside decision range of {series_id!r}"}
        with self._lock:
            self._pending.pop((series_id, t), None)
            if label == "skip":
                return 200, {"status": "skipped", "series": series_id, "t": t}
            existing = self.store.get(series_id, t)
            if existing is not None and existing.provenance == "human":
                return 409, {
                    "error": "already labeled by a human",
                    "series": series_id,
                    "t": t,
                    "label": existing.label,
                }
            record = LabelRecord(series=series_id, t=t, label=int(label),
                                 provenance="human", confidence=1.0)
            self.store.put(record)
            if self.labels_path:
                self.store.save_jsonl(self.labels_path)
        return 200, {"status": "ok", "series": series_id, "t": t, "label": int(label),
                     "provenance": "human"}

    def status(self) -> dict:
        with self._lock:
            return {
                "series": sorted(self.series),
                "n_steps": self.n_steps,
                "pending": len(self._pending),
                "labels": self.store.counts_by_provenance(),
            }

    def query_payload(self) -> list[dict]:
        out = []
        for q in self.pending():
            series = self.series[q.series]
            window = series.values[q.t - self.n_steps + 1 : q.t + 1]
            values = window[:, 0] if series.dims == 1 else window
            out.append({
                "series": q.series,
                "t": q.t,
                "margin": q.margin,
                "window": values.tolist(),
            })
        return out

    def series_slice(self, series_id: str, lo: int | None, hi: int | None) -> tuple[int, dict]:
        series = self.series.get(series_id)
        if series is None:
            return 404, {"error": f"unknown series {series_id!r}"}
        lo = 0 if lo is None else max(0, lo)
        hi = series.length if hi is None else min(series.length, hi)
        if lo >= hi:
            return 400, {"error": f"empty range [{lo}, {hi})"}
        values = series.values[lo:hi]
        payload_values = values[:, 0].tolist() if series.dims == 1 else values.tolist()
        known = [
            rec.to_dict()
            for t, rec in sorted(self.store.known_steps(series_id).items())
            if lo <= t < hi
        ]
        return 200, {
            "series": series_id,
            "from": lo,
            "to": hi,
            "values": payload_values,
            "labels": known,
        }


class AnnotationHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "tsadrl-annotation"

    @property
    def state(self) -> AnnotationState:
        return self.server.state  # type: ignore[attr-defined]

    @property
    def static_dir(self) -> str | None:
        return self.server.static_dir  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        parsed = urlparse(self.path)
        path = parsed.path
        if path == "/api/status":
            self._send_json(200, self.state.status())
        elif path == "/api/queries":
            self._send_json(200, {"queries": self.state.query_payload()})
        elif path.startswith("/api/series/"):
            series_id = path[len("/api/series/"):]
            params = parse_qs(parsed.query)

            def _int(name):
                vals = params.get(name)
                if not vals:
                    return None
                try:
                    return int(vals[0])
                except ValueError:
                    raise InvalidArgs(f"{name} must be an integer")

            try:
                lo, hi = _int("from"), _int("to")
            except InvalidArgs as exc:
                self._send_json(400, {"error": str(exc)})
                return
            status, payload = self.state.series_slice(series_id, lo, hi)
            self._send_json(status, payload)
        elif path.startswith("/api/"):
            self._send_json(404, {"error": f"no such endpoint {path}"})
        else:
            self._serve_static(path)

    def do_POST(self):
        parsed = urlparse(self.path)
        if parsed.path != "/api/labels":
            self._send_json(404, {"error": f"no such endpoint {parsed.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            length = -1
        if not 0 < length <= MAX_BODY_BYTES:
            self._send_json(400, {"error": "missing or oversized body"})
            return
        try:
            body = json.loads(self.rfile.read(length))
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._send_json(400, {"error": "body is not valid JSON"})
            return
        if not isinstance(body, dict):
            self._send_json(400, {"error": "body must be an object"})
            return
        series_id = body.get("series")
        t = body.get("t")
        label = body.get("label")
        if not isinstance(series_id, str) or not isinstance(t, int) or isinstance(t, bool):
            self._send_json(400, {"error": "need string 'series' and integer 't'"})
            return
        if label not in (0, 1, "skip"):
            self._send_json(400, {"error": "label must be 0, 1, or \"skip\""})
            return
        status, payload = self.state.submit(series_id, t, label)
        self._send_json(status, payload)

    def _serve_static(self, path: str) -> None:
        root = self.static_dir
        if root is None:
            self._send_json(404, {"error": "no static assets configured"})
            return
        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(root, rel))
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not full.startswith(os.path.realpath(root) + os.sep) and full != os.path.realpath(root):
            self._send_json(404, {"error": "not found"})
            return
        if not os.path.isfile(full):
            self._send_json(404, {"error": "not found"})
            return
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            data = fh.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class AnnotationServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], state: AnnotationState,
                 static_dir: str | None = None):
        super().__init__(address, AnnotationHandler)
        self.state = state
        self.static_dir = static_dir


def start_server(state: AnnotationState, host: str = "127.0.0.1", port: int = 8765,
                 static_dir: str | None = None) -> AnnotationServer:
    """Bind and start serving on a daemon thread; caller shuts down via .shutdown()."""
    server = AnnotationServer((host, port), state, static_dir=static_dir)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
