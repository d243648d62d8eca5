"""JSON-over-HTTP service for sessions, knowledge-base management, and runs.

Stdlib ``http.server`` only: the workloads are desk-scale and the wire
contract is small. Sessions are serialized by a per-session lock (single
writer), runs execute on a bounded background pool with polling, and every
mutation is written to the data directory before it is acknowledged, so a
restart loses nothing that was ever confirmed to a client.
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from . import harness, knowledge, orchestrator, ppo, simworld
from .errors import EmbedderOversize, FormulinkError, SessionClosed
from .formulation import (
    diff,
    diff_to_json,
    formulation_to_json,
    ground_truth_formulation,
    parse_formulation,
)
from .gateway import ModelProfile

SCHEMA_VERSION = 1

_ENV_OVERRIDES = {
    "FORMULINK_DATA_DIR": "data_dir",
    "FORMULINK_API_BASE": "api_base",
    "FORMULINK_API_KEY": "api_key",
}

_CONFIG_DEFAULTS = {
    "listen_host": "127.0.0.1",
    "listen_port": "8765",
    "data_dir": "formulink-data",
    "corpus_dir": "",
    "corpus_seed": "7",
    "profile": "scripted-formulator",
    "backend": "scripted",
    "chunk_size": "2000",
    "retrieval_k": "1",
    "api_base": "",
    "api_key": "",
}


@dataclass(frozen=True)
class ServiceConfig:
    listen_host: str
    listen_port: int
    data_dir: Path
    corpus_dir: str
    corpus_seed: int
    profile: str
    backend: str
    chunk_size: int
    retrieval_k: int

    @staticmethod
    def load(path: str | Path | None = None, overrides: dict | None = None) -> "ServiceConfig":
        """key = value lines with '#' comments; env vars win over the file."""
        import os
        values = dict(_CONFIG_DEFAULTS)
        if path is not None:
            for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, _, value = line.partition("=")
                key = key.strip()
                if key not in values:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = value.strip()
        for env, key in _ENV_OVERRIDES.items():
            if os.environ.get(env):
                values[key] = os.environ[env]
        if overrides:
            values.update({k: str(v) for k, v in overrides.items()})
        port = int(values["listen_port"])
        if not 0 <= port <= 65535:
            raise ValueError(f"listen_port {port} out of range")
        chunk_size = int(values["chunk_size"])
        k = int(values["retrieval_k"])
        if k < 1:
            raise ValueError("retrieval_k must be >= 1")
        return ServiceConfig(
            listen_host=values["listen_host"],
            listen_port=port,
            data_dir=Path(values["data_dir"]),
            corpus_dir=values["corpus_dir"],
            corpus_seed=int(values["corpus_seed"]),
            profile=values["profile"],
            backend=values["backend"],
            chunk_size=chunk_size,
            retrieval_k=k,
        )


class ApiError(Exception):
    def __init__(self, status: int, message: str, extra: dict | None = None):
        super().__init__(message)
        self.status = status
        self.message = message
        self.extra = extra or {}


@dataclass
class _Run:
    run_id: str
    kind: str
    status: str = "pending"          # pending | running | finished | error
    result: dict | None = None
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class App:
    """Service state shared across request threads."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = config.data_dir
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "runs").mkdir(parents=True, exist_ok=True)

        self._registry_lock = threading.Lock()
        self._indexes: dict[int, knowledge.KnowledgeIndex | orchestrator.IngestFailure] = {}
        self._sessions: dict[str, orchestrator.SessionState] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._runs: dict[str, _Run] = {}
        self._executor = ThreadPoolExecutor(max_workers=2)

        if config.corpus_dir:
            self.docs = knowledge.load_corpus(config.corpus_dir)
            _, self.facts = simworld.generate_corpus(config.corpus_seed)
        else:
            doc, self.facts = simworld.generate_corpus(config.corpus_seed)
            self.docs = [doc]
        self.vocabulary = simworld.query_vocabulary(self.facts)
        self._restore()

    # --- persistence ---------------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / f"{session_id}.json"

    def _run_path(self, run_id: str) -> Path:
        return self.data_dir / "runs" / f"{run_id}.json"

    def _persist_session(self, state: orchestrator.SessionState) -> None:
        payload = orchestrator.session_to_json(state)
        self._session_path(state.session_id).write_text(
            json.dumps(payload, indent=2), encoding="utf-8")

    def _persist_run(self, run: _Run) -> None:
        payload = {"run_id": run.run_id, "kind": run.kind, "status": run.status,
                   "result": run.result, "error": run.error}
        self._run_path(run.run_id).write_text(json.dumps(payload, indent=2),
                                              encoding="utf-8")

    def _restore(self) -> None:
        for path in sorted((self.data_dir / "sessions").glob("*.json")):
            data = json.loads(path.read_text(encoding="utf-8"))
            state = orchestrator.session_from_json(data, index=None, world=self.facts)
            if not state.terminal and state.index_key:
                chunk_size = int(state.index_key.rsplit(":", 1)[-1])
                state.index = self._index_for(chunk_size)
            self._sessions[state.session_id] = state
            self._session_locks[state.session_id] = threading.Lock()
        for path in sorted((self.data_dir / "runs").glob("*.json")):
            data = json.loads(path.read_text(encoding="utf-8"))
            run = _Run(run_id=data["run_id"], kind=data["kind"], status=data["status"],
                       result=data["result"], error=data["error"])
            if run.status in ("pending", "running"):
                run.status = "error"
                run.error = "interrupted by service restart"
                self._persist_run(run)
            self._runs[run.run_id] = run

    # --- knowledge base -------------------------------------------------------

    def _index_for(self, chunk_size: int):
        with self._registry_lock:
            if chunk_size not in self._indexes:
                try:
                    self._indexes[chunk_size] = knowledge.build_index(self.docs, chunk_size)
                except FormulinkError as exc:
                    self._indexes[chunk_size] = orchestrator.IngestFailure(str(exc))
            return self._indexes[chunk_size]

    def ingest(self, directory: str | None, chunk_size: int) -> dict:
        docs = knowledge.load_corpus(directory) if directory else self.docs
        try:
            index = knowledge.build_index(docs, chunk_size)
        except EmbedderOversize as exc:
            raise ApiError(422, str(exc), {
                "error_kind": "embedder_oversize",
                "token_count": exc.token_count,
                "limit": exc.limit,
                "doc": exc.doc_id,
                "chunk": exc.chunk_index,
            })
        except FormulinkError as exc:
            raise ApiError(400, str(exc))
        if not directory:
            with self._registry_lock:
                self._indexes[chunk_size] = index
        return {"documents": len(docs), "chunks": len(index.chunks),
                "chunk_size": chunk_size}

    # --- sessions --------------------------------------------------------------

    def create_session(self, k: int, chunk_size: int, profile_name: str | None) -> dict:
        if k < 1:
            raise ApiError(400, "k must be >= 1")
        index = self._index_for(chunk_size)
        profile = ModelProfile(name=profile_name or self.config.profile,
                               backend=self.config.backend)
        state = orchestrator.start_session(
            profile, index, k,
            vocabulary=self.vocabulary, world=self.facts,
            index_key=f"{self.docs[0].id}:{chunk_size}")
        with self._registry_lock:
            self._sessions[state.session_id] = state
            self._session_locks[state.session_id] = threading.Lock()
        self._persist_session(state)
        return {"session_id": state.session_id}

    def _get_session(self, session_id: str) -> tuple[orchestrator.SessionState, threading.Lock]:
        with self._registry_lock:
            if session_id not in self._sessions:
                raise ApiError(404, f"unknown session {session_id!r}")
            return self._sessions[session_id], self._session_locks[session_id]

    def post_message(self, session_id: str, text: str) -> dict:
        state, lock = self._get_session(session_id)
        with lock:
            if state.terminal:
                raise ApiError(409, f"session is {state.stage}", {
                    "stage": state.stage, "failure_reason": state.failure_reason})
            try:
                reply, state, entry = orchestrator.advance(state, text)
            except SessionClosed as exc:
                raise ApiError(409, str(exc))
            self._persist_session(state)
            if (state.stage == orchestrator.STAGE_FAILED
                    and state.failure_reason == orchestrator.FAILURE_CONTEXT_OVERSIZE):
                raise ApiError(422, entry.get("error", "context oversize"), {
                    "error_kind": "context_oversize",
                    "prompt_tokens": entry["prompt_tokens"],
                    "budget": entry.get("budget"),
                    "stage": state.stage,
                    "round": state.round,
                    "failure_reason": state.failure_reason,
                })
            return {"reply": reply, "stage": state.stage, "round": state.round,
                    "trace": entry}

    def session_view(self, session_id: str) -> dict:
        state, lock = self._get_session(session_id)
        with lock:
            return orchestrator.session_to_json(state)

    def session_formulation(self, session_id: str) -> dict:
        state, lock = self._get_session(session_id)
        with lock:
            if state.stage != orchestrator.STAGE_DONE:
                raise ApiError(404, "session has no formulation",
                               {"stage": state.stage})
            text = state.transcript[-1][1]
        formulation = parse_formulation(text)
        reference = ground_truth_formulation()
        return {
            "formulation": formulation_to_json(formulation),
            "diff_vs_ground_truth": diff_to_json(diff(formulation, reference)),
        }

    # --- runs ---------------------------------------------------------------------

    def start_run(self, kind: str, params: dict) -> dict:
        run = _Run(run_id=uuid.uuid4().hex[:12], kind=kind)
        with self._registry_lock:
            self._runs[run.run_id] = run
        self._persist_run(run)
        self._executor.submit(self._execute_run, run, params)
        return {"run_id": run.run_id}

    def _execute_run(self, run: _Run, params: dict) -> None:
        with run.lock:
            run.status = "running"
            self._persist_run(run)
        try:
            if run.kind == "sweep":
                table = harness.run_sweep(int(params.get("seed", self.config.corpus_seed)))
                out_dir = self.data_dir / "runs" / run.run_id
                harness.write_outputs(table, out_dir)
                result = table.to_json()
            elif run.kind == "compare":
                seeds = tuple(params.get("seeds", harness.DEFAULT_COMPARISON_SEEDS))
                overrides = {key: params[key] for key in
                             ("iterations", "batch_episodes", "minibatch_size")
                             if key in params}
                config = ppo.TrainConfig(seed=0, **overrides) if overrides else None
                report = harness.run_comparison(seeds=seeds, config=config)
                out_dir = self.data_dir / "runs" / run.run_id
                harness.write_outputs(report, out_dir)
                result = report.to_json()
            else:
                raise ValueError(f"unknown run kind {run.kind!r}")
            with run.lock:
                run.status = "finished"
                run.result = result
                self._persist_run(run)
        except Exception as exc:   # background worker: report, never crash the pool
            with run.lock:
                run.status = "error"
                run.error = f"{type(exc).__name__}: {exc}"
                self._persist_run(run)

    def run_view(self, run_id: str) -> dict:
        with self._registry_lock:
            if run_id not in self._runs:
                raise ApiError(404, f"unknown run {run_id!r}")
            run = self._runs[run_id]
        with run.lock:
            return {"run_id": run.run_id, "kind": run.kind, "status": run.status,
                    "result": run.result, "error": run.error}


class _Handler(BaseHTTPRequestHandler):
    app: App

    def log_message(self, fmt, *args):   # quiet by default
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps({**payload, "schema_version": SCHEMA_VERSION}).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"invalid JSON body: {exc}")

    def _dispatch(self, method: str) -> None:
        try:
            payload = self._route(method)
            self._send(200, payload)
        except ApiError as exc:
            self._send(exc.status, {"error": exc.message, **exc.extra})
        except Exception as exc:   # defensive: surface as 500, keep serving
            self._send(500, {"error": f"{type(exc).__name__}: {exc}"})

    def _route(self, method: str) -> dict:
        app = self.app
        path = self.path.split("?", 1)[0].rstrip("/")
        body = self._read_json() if method == "POST" else {}

        if method == "POST" and path == "/sessions":
            return app.create_session(
                k=int(body.get("k", app.config.retrieval_k)),
                chunk_size=int(body.get("chunk_size", app.config.chunk_size)),
                profile_name=body.get("profile"))
        m = re.fullmatch(r"/sessions/([0-9a-f-]+)/messages", path)
        if method == "POST" and m:
            if "text" not in body or not isinstance(body["text"], str):
                raise ApiError(400, "body must carry a string 'text' field")
            return app.post_message(m.group(1), body["text"])
        m = re.fullmatch(r"/sessions/([0-9a-f-]+)/formulation", path)
        if method == "GET" and m:
            return app.session_formulation(m.group(1))
        m = re.fullmatch(r"/sessions/([0-9a-f-]+)", path)
        if method == "GET" and m:
            return app.session_view(m.group(1))
        if method == "POST" and path == "/kb/ingest":
            if "chunk_size" not in body:
                raise ApiError(400, "body must carry chunk_size")
            return app.ingest(body.get("dir"), int(body["chunk_size"]))
        if method == "POST" and path == "/runs/sweep":
            return app.start_run("sweep", body)
        if method == "POST" and path == "/runs/compare":
            return app.start_run("compare", body)
        m = re.fullmatch(r"/runs/([0-9a-f-]+)", path)
        if method == "GET" and m:
            return app.run_view(m.group(1))
        raise ApiError(404, f"no route for {method} {path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


def make_server(config: ServiceConfig) -> tuple[ThreadingHTTPServer, App]:
    app = App(config)
    handler = type("BoundHandler", (_Handler,), {"app": app})
    server = ThreadingHTTPServer((config.listen_host, config.listen_port), handler)
    return server, app


def serve(config: ServiceConfig) -> None:
    server, _ = make_server(config)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (data dir: {config.data_dir})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
