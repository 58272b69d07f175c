"""Annotation HTTP server hosting the blind labeling protocol.

Endpoints (all JSON, UTF-8):
  GET  /api/tasks/next?annotator=ID  -> next unlabeled task | 204 when done
  POST /api/labels                   -> 201 created | 409 duplicate
  GET  /api/progress                 -> per-annotator counts (+ report when complete)
  GET  /api/agreement                -> Krippendorff alpha | 409 while uncomputable

The label store is append-only with duplicate (task, annotator) submissions
rejected; reads serve point-in-time snapshots. Static assets (the browser
client) are served from an optional directory.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from . import agreement as agreement_mod
from .agreement import AnnotationError, AnnotatorLabel
from .ingest import NON_PREMISE, PREMISE

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


class DuplicateLabelError(ValueError):
    pass


class LabelStore:
    """Append-only, file-backed label store with duplicate rejection."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._labels: dict[tuple[str, str], AnnotatorLabel] = {}
        if self.path.exists():
            for label in agreement_mod.read_labels(self.path):
                self._labels[(label.task_id, label.annotator_id)] = label
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()

    def add(self, task_id: str, annotator_id: str, label: str) -> AnnotatorLabel:
        record = AnnotatorLabel(
            task_id=task_id,
            annotator_id=annotator_id,
            label=label,
            timestamp=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        )
        with self._lock:
            key = (task_id, annotator_id)
            if key in self._labels:
                raise DuplicateLabelError(
                    f"annotator {annotator_id!r} already labeled task {task_id!r}"
                )
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(
                    f"{record.task_id}\t{record.annotator_id}\t{record.label}\t{record.timestamp}\n"
                )
                handle.flush()
            self._labels[key] = record
        return record

    def snapshot(self) -> list[AnnotatorLabel]:
        with self._lock:
            return list(self._labels.values())

    def annotator_task_ids(self, annotator_id: str) -> set[str]:
        with self._lock:
            return {task for task, annotator in self._labels if annotator == annotator_id}


@dataclass
class AnnotationService:
    """Protocol logic shared by the HTTP layer; tasks stay in display order."""

    tasks: list[dict]
    store: LabelStore
    key: dict[str, str] | None = None
    quorum: int = 3
    n_annotators: int = 4
    static_dir: Path | None = None

    def __post_init__(self) -> None:
        self._task_ids = {task["task_id"] for task in self.tasks}

    def next_task(self, annotator_id: str) -> dict | None:
        done = self.store.annotator_task_ids(annotator_id)
        for task in self.tasks:
            if task["task_id"] not in done:
                return task
        return None

    def submit(self, task_id: str, annotator_id: str, label: str) -> AnnotatorLabel:
        if label not in (PREMISE, NON_PREMISE):
            raise AnnotationError(f"label must be {PREMISE} or {NON_PREMISE}")
        if task_id not in self._task_ids:
            raise KeyError(task_id)
        if not annotator_id:
            raise AnnotationError("annotator_id must be non-empty")
        return self.store.add(task_id, annotator_id, label)

    def progress(self) -> dict:
        labels = self.store.snapshot()
        per_annotator: dict[str, int] = {}
        per_task: dict[str, int] = {}
        for label in labels:
            per_annotator[label.annotator_id] = per_annotator.get(label.annotator_id, 0) + 1
            per_task[label.task_id] = per_task.get(label.task_id, 0) + 1
        complete = bool(self.tasks) and all(
            per_task.get(task["task_id"], 0) >= self.n_annotators for task in self.tasks
        )
        payload = {
            "total_tasks": len(self.tasks),
            "labels_total": len(labels),
            "per_annotator": per_annotator,
            "n_annotators": self.n_annotators,
            "complete": complete,
            "report": None,
        }
        if complete and self.key is not None:
            grouped = agreement_mod.group_labels(labels)
            votes = [
                agreement_mod.majority_vote(
                    grouped[task_id], n_annotators=self.n_annotators, quorum=self.quorum
                )
                for task_id in sorted(grouped)
            ]
            report = agreement_mod.render_report(votes, self.key, None)
            payload["report"] = {"models": report["models"], "overall": report["overall"]}
        return payload

    def agreement(self) -> dict:
        labels = self.store.snapshot()
        matrix = agreement_mod.labels_to_matrix(labels) if labels else []
        result = agreement_mod.krippendorff_alpha(matrix)
        return result.to_dict()


class _Handler(BaseHTTPRequestHandler):
    service: AnnotationService  # set by the server factory

    # ---- plumbing ----------------------------------------------------------

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send_cors(self) -> None:
        # lets a client served from another origin (e.g. a dev server) talk
        # to the API; same-origin deployments are unaffected
        self.send_header("Access-Control-Allow-Origin", "*")

    def _send_json(self, status: int, payload) -> None:
        blob = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self._send_cors()
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def _send_empty(self, status: int) -> None:
        self.send_response(status)
        self._send_cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_OPTIONS(self):
        self.send_response(204)
        self._send_cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # ---- routes ------------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/api/tasks/next":
            query = parse_qs(url.query)
            annotator = (query.get("annotator") or [""])[0].strip()
            if not annotator:
                self._send_json(400, {"error": "annotator query parameter is required"})
                return
            task = self.service.next_task(annotator)
            if task is None:
                self._send_empty(204)
            else:
                self._send_json(200, task)
        elif url.path == "/api/progress":
            self._send_json(200, self.service.progress())
        elif url.path == "/api/agreement":
            try:
                self._send_json(200, self.service.agreement())
            except AnnotationError as err:
                self._send_json(409, {"error": str(err)})
        else:
            self._serve_static(url.path)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/labels":
            self._send_json(404, {"error": "unknown endpoint"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            task_id = str(body["task_id"])
            annotator_id = str(body["annotator_id"])
            label = str(body["label"])
        except (ValueError, KeyError) as err:
            self._send_json(400, {"error": f"malformed submission: {err}"})
            return
        try:
            record = self.service.submit(task_id, annotator_id, label)
        except DuplicateLabelError as err:
            self._send_json(409, {"error": str(err)})
            return
        except KeyError:
            self._send_json(404, {"error": f"unknown task {task_id!r}"})
            return
        except AnnotationError as err:
            self._send_json(400, {"error": str(err)})
            return
        self._send_json(
            201,
            {"status": "created", "task_id": record.task_id, "annotator_id": record.annotator_id},
        )

    def _serve_static(self, path: str) -> None:
        root = self.service.static_dir
        if root is None:
            if path == "/":
                self._send_json(200, {"service": "argforge annotation server"})
            else:
                self._send_json(404, {"error": "not found"})
            return
        name = "index.html" if path == "/" else path.lstrip("/")
        target = (root / name).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        blob = target.read_bytes()
        self.send_response(200)
        self._send_cors()
        content_type = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)


def create_server(
    tasks_path: str | Path,
    labels_path: str | Path,
    key_path: str | Path | None = None,
    host: str = "127.0.0.1",
    port: int = 8040,
    quorum: int = 3,
    n_annotators: int = 4,
    static_dir: str | Path | None = None,
) -> ThreadingHTTPServer:
    """Build the annotation server; raises OSError when the port is taken."""
    tasks = agreement_mod.read_tasks(tasks_path)
    key = agreement_mod.read_key(key_path) if key_path else None
    service = AnnotationService(
        tasks=tasks,
        store=LabelStore(labels_path),
        key=key,
        quorum=quorum,
        n_annotators=n_annotators,
        static_dir=Path(static_dir) if static_dir else None,
    )
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
