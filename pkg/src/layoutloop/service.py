"""HTTP workbench service: session-based refinement rounds over JSON.

Sessions persist in an embedded sqlite store under the data directory, so a
human-in-the-loop session survives restarts. Per-session rounds are mutually
exclusive (409 on contention); renders are cached by canonical-code hash.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from .backends import BackendError, EchoReviser, HeuristicReviser, ReviserBackend
from .core import (
    ClassRegistry,
    LayoutDoc,
    ParseError,
    code_hash,
    default_registry,
    parse_layout_code,
    validate_layout,
)
from .metrics import embed_population, fid
from .orchestrator import ChainConfig, ChainSession, SessionState
from .render import ColorLegend, default_legend, render_png
from .sampler import Setup
from .trajectory import load_corpus

_SETUP_ALIASES = {
    "direct": Setup.DIRECT_S0,
    "direct-si": Setup.DIRECT_SI,
    "hop": Setup.HOP,
    "single": Setup.SINGLE_REV,
    "multi": Setup.MULTI_REV,
}


@dataclass
class ServiceConfig:
    data_dir: Path
    registry: ClassRegistry | None = None
    legend: ColorLegend | None = None
    backends: dict[str, ReviserBackend] = field(default_factory=dict)
    render_scale: int = 1
    session_ttl_s: float = 24 * 3600.0
    chain: ChainConfig = field(default_factory=ChainConfig)
    frontend_dir: Path | None = None  # built workbench to serve at /

    def __post_init__(self) -> None:
        self.data_dir = Path(self.data_dir)
        if self.frontend_dir is not None:
            self.frontend_dir = Path(self.frontend_dir)
        self.registry = self.registry or default_registry()
        self.legend = self.legend or default_legend(self.registry)
        if not self.backends:
            self.backends = {
                "heuristic": HeuristicReviser(self.registry),
                "echo": EchoReviser(self.registry),
            }


class SessionStore:
    """sqlite-backed token -> session-state map with idle TTL expiry."""

    def __init__(self, path: Path, ttl_s: float) -> None:
        self.path = path
        self.ttl_s = ttl_s
        self._lock = threading.Lock()
        with self._connect() as conn:
            conn.execute(
                "CREATE TABLE IF NOT EXISTS sessions ("
                "token TEXT PRIMARY KEY, backend TEXT NOT NULL, "
                "created REAL NOT NULL, updated REAL NOT NULL, state TEXT NOT NULL)"
            )

    def _connect(self) -> sqlite3.Connection:
        return sqlite3.connect(self.path, timeout=10.0)

    def purge_expired(self, now: float | None = None) -> None:
        now = now if now is not None else time.time()
        with self._lock, self._connect() as conn:
            conn.execute("DELETE FROM sessions WHERE updated < ?", (now - self.ttl_s,))

    def put(self, token: str, backend: str, state: SessionState, created: float | None = None) -> None:
        now = time.time()
        payload = json.dumps(state.to_dict(), sort_keys=True)
        with self._lock, self._connect() as conn:
            row = conn.execute("SELECT created FROM sessions WHERE token = ?", (token,)).fetchone()
            created_at = row[0] if row else (created if created is not None else now)
            conn.execute(
                "INSERT OR REPLACE INTO sessions (token, backend, created, updated, state) VALUES (?,?,?,?,?)",
                (token, backend, created_at, now, payload),
            )

    def get(self, token: str) -> tuple[SessionState, str, float, float] | None:
        with self._lock, self._connect() as conn:
            row = conn.execute(
                "SELECT state, backend, created, updated FROM sessions WHERE token = ?", (token,)
            ).fetchone()
        if row is None:
            return None
        if time.time() - row[3] > self.ttl_s:
            return None
        return SessionState.from_dict(json.loads(row[0])), row[1], row[2], row[3]


class _CreateSession(BaseModel):
    prompt: str
    s0_dsl: str
    setup: str = "multi"
    backend: str = "heuristic"
    temperature: float = 0.0


class _HumanEdit(BaseModel):
    dsl: str


def _dsl_error_response(exc: ParseError | None, violations) -> JSONResponse:
    body = {
        "ok": False,
        "violations": [v.to_dict() for v in violations],
        "parse_error": None if exc is None else {"line": exc.line, "message": exc.message},
    }
    return JSONResponse(status_code=400, content=body)


def create_app(config: ServiceConfig) -> FastAPI:
    config.data_dir.mkdir(parents=True, exist_ok=True)
    renders_dir = config.data_dir / "renders"
    renders_dir.mkdir(exist_ok=True)
    store = SessionStore(config.data_dir / "sessions.db", config.session_ttl_s)
    registry = config.registry
    legend = config.legend

    app = FastAPI(title="layoutloop workbench API", version="0.1.0")
    app.state.config = config
    round_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def _round_lock(token: str) -> threading.Lock:
        with locks_guard:
            return round_locks.setdefault(token, threading.Lock())

    def _cache_render(doc: LayoutDoc) -> str:
        from .core import serialize_layout_code

        code = serialize_layout_code(doc)
        render_id = code_hash(code, str(config.render_scale), length=32)
        path = renders_dir / f"{render_id}.png"
        if not path.exists():
            # atomic insert so concurrent writers of the same render stay sound
            tmp = path.with_suffix(f".{uuid.uuid4().hex}.tmp")
            tmp.write_bytes(render_png(doc, legend, config.render_scale, lenient=True))
            tmp.replace(path)
        return render_id

    def _parse_strict(dsl: str):
        try:
            doc = parse_layout_code(dsl, registry, strict=False)
        except ParseError as exc:
            return None, _dsl_error_response(exc, ())
        report = validate_layout(doc)
        if not report.ok:
            return None, _dsl_error_response(None, report.violations)
        return doc, None

    def _session_view(token: str, state: SessionState, backend: str, created: float, updated: float) -> dict:
        s0_doc = parse_layout_code(state.s0_code, registry)
        rounds = []
        for record in state.rounds:
            doc = parse_layout_code(record.output_code, registry)
            rounds.append({**record.to_dict(), "png_url": f"/renders/{_cache_render(doc)}.png"})
        return {
            "token": token,
            "prompt": state.prompt,
            "setup": state.config.setup.value,
            "backend": backend,
            "status": state.status.value,
            "echo_round": state.echo_round,
            "echo_flagged": state.echo_flagged,
            "s0": {"code": state.s0_code, "png_url": f"/renders/{_cache_render(s0_doc)}.png"},
            "rounds": rounds,
            "human_injections": [{"round": r, "code": c} for r, c in state.human_injections],
            "created": created,
            "updated": updated,
        }

    @app.get("/legend")
    def get_legend() -> dict:
        return {
            "background": "%02x%02x%02x" % legend.background,
            "classes": [
                {"id": cls.id, "name": cls.name, "rgb": "%02x%02x%02x" % legend.color_for(cls)}
                for cls in registry
            ],
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: _CreateSession):
        store.purge_expired()
        if body.backend not in config.backends:
            return JSONResponse(status_code=400, content={"detail": f"unknown backend {body.backend!r}"})
        if body.setup not in _SETUP_ALIASES:
            return JSONResponse(status_code=400, content={"detail": f"unknown setup {body.setup!r}"})
        doc, err = _parse_strict(body.s0_dsl)
        if err is not None:
            return err
        from .core import serialize_layout_code

        cfg = ChainConfig(
            rounds=config.chain.rounds,
            setup=_SETUP_ALIASES[body.setup],
            temperature=body.temperature,
            echo_rouge_threshold=config.chain.echo_rouge_threshold,
            echo_window=config.chain.echo_window,
            max_context_revisions=config.chain.max_context_revisions,
            max_tokens=config.chain.max_tokens,
        )
        state = SessionState(prompt=body.prompt, s0_code=serialize_layout_code(doc), config=cfg)
        token = uuid.uuid4().hex
        store.put(token, body.backend, state)
        return {"token": token, "rendered_png_url": f"/renders/{_cache_render(doc)}.png"}

    def _load(token: str):
        found = store.get(token)
        if found is None:
            return None, JSONResponse(status_code=404, content={"detail": "unknown session"})
        return found, None

    def _run_round(token: str, run) :
        found, err = _load(token)
        if err is not None:
            return err
        state, backend_name, created, _updated = found
        lock = _round_lock(token)
        if not lock.acquire(blocking=False):
            return JSONResponse(status_code=409, content={"detail": "round already in progress"})
        try:
            session = ChainSession(config.backends[backend_name], state, registry)
            try:
                record = run(session)
            except BackendError as exc:
                return JSONResponse(status_code=502, content={"detail": f"backend failure: {exc}"})
            store.put(token, backend_name, session.state, created)
            doc = parse_layout_code(record.output_code, registry)
            return {
                "round": record.to_dict(),
                "png_url": f"/renders/{_cache_render(doc)}.png",
                "status": session.state.status.value,
                "echo_round": session.state.echo_round,
            }
        finally:
            lock.release()

    @app.post("/sessions/{token}/rounds")
    def run_self_round(token: str):
        return _run_round(token, lambda session: session.step())

    @app.post("/sessions/{token}/human-edit")
    def run_human_round(token: str, body: _HumanEdit):
        doc, err = _parse_strict(body.dsl)
        if err is not None:
            return err
        return _run_round(token, lambda session: session.step_human(doc))

    @app.get("/sessions/{token}")
    def get_session(token: str):
        found, err = _load(token)
        if err is not None:
            return err
        state, backend_name, created, updated = found
        return _session_view(token, state, backend_name, created, updated)

    @app.get("/renders/{render_id}.png")
    def get_render(render_id: str):
        path = renders_dir / f"{render_id}.png"
        if not render_id.isalnum() or not path.exists():
            return JSONResponse(status_code=404, content={"detail": "unknown render"})
        return Response(content=path.read_bytes(), media_type="image/png")

    if config.frontend_dir is not None and config.frontend_dir.is_dir():
        from fastapi.staticfiles import StaticFiles

        index_html = config.frontend_dir / "index.html"
        dist_dir = config.frontend_dir / "dist"
        if dist_dir.is_dir():
            app.mount("/dist", StaticFiles(directory=dist_dir), name="dist")

        @app.get("/", include_in_schema=False)
        def workbench_index():
            return Response(content=index_html.read_bytes(), media_type="text/html")

    @app.get("/metrics/fid")
    def get_fid(a: str, b: str):
        base = config.data_dir.resolve()

        def _resolve(rel: str) -> Path | None:
            candidate = (base / rel).resolve()
            return candidate if candidate.is_file() and base in candidate.parents else None

        path_a, path_b = _resolve(a), _resolve(b)
        if path_a is None or path_b is None:
            return JSONResponse(status_code=404, content={"detail": "corpus file not found under data dir"})
        pop_a = embed_population(load_corpus(path_a, registry).finals(), registry)
        pop_b = embed_population(load_corpus(path_b, registry).finals(), registry)
        return fid(pop_a, pop_b).to_dict()

    return app
