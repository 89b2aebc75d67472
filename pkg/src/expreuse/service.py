"""HTTP front for the reuse engine.

One process, one engine, one lock: mutation is serialized so the store
and its candidate indexes never see concurrent writers. Query posting is
idempotent per caller-chosen request id, which makes retry loops safe on
flaky links. The answer payload is the canonical encoding, so a client
sees byte for byte what the library would have produced.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Iterator

from fastapi import FastAPI, Request as HttpRequest
from fastapi.responses import JSONResponse, StreamingResponse

from . import battery, train
from .config import ServiceConfig
from .engine import EventLog, ReuseEngine
from .errors import DomainViolation, ExecutionFailure, ReuseError, UnknownLanguage
from .languages import LanguageRegistry, canon_answer, decode_query, query_key
from .persist import open_store
from .store import ExperimentStore, MemoryTraceStore, TtlConfig
from .values import (
    BoxDomain,
    ProfileDomain,
    RealDomain,
    SymbolDomain,
    canon_dumps,
)


def build_runtime(config: ServiceConfig | None = None) -> ReuseEngine:
    """Registry + store + engine wired from a config."""
    config = config or ServiceConfig()
    registry = LanguageRegistry()
    train.register_train_languages(registry)
    battery.register_battery_languages(registry)
    ttl = TtlConfig(**config.ttl_kwargs())
    if config.store_dir:
        store = open_store(config.store_dir, ttl=ttl)
    else:
        store = ExperimentStore(trace_backend=MemoryTraceStore(), ttl=ttl)
    events = EventLog(sink_path=config.event_log)
    schemes = [
        train.train_user_scheme(**config.train),
        battery.tms_request_scheme(**config.battery),
    ]
    return ReuseEngine(registry, store, schemes, events=events)


def _domain_descriptor(dom) -> dict:
    if isinstance(dom, RealDomain):
        out: dict = {"kind": "real", "unit": dom.unit}
        if dom.lo != float("-inf"):
            out["lo"] = dom.lo
        if dom.hi != float("inf"):
            out["hi"] = dom.hi
        if dom.allow_star:
            out["star"] = True
        return out
    if isinstance(dom, SymbolDomain):
        return {"kind": "symbol", "members": sorted(dom.members), "star": dom.allow_star}
    if isinstance(dom, ProfileDomain):
        return {"kind": "profile"}
    if isinstance(dom, BoxDomain):
        return {"kind": "box", "axisVars": sorted(dom.axis_vars)}
    return {"kind": "opaque"}


def _language_descriptor(registry: LanguageRegistry, lang_id: str) -> dict:
    lang = registry.query_language(lang_id)
    desc: dict = {
        "id": lang.id,
        "variables": {v: _domain_descriptor(lang.domains[v]) for v in sorted(lang.variables)},
        "schemes": sorted(sorted(s) for s in lang.schemes),
    }
    answers = lang.answers
    if hasattr(answers, "point_vars"):
        desc["answer"] = {"kind": "front", "pointVars": sorted(answers.point_vars)}
    else:
        desc["answer"] = {"kind": "bool"}
    try:
        structure = registry.structure_for(lang_id)
        rlang = registry.request_language(structure.request_language_id)
        desc["request"] = {
            "id": rlang.id,
            "poiVars": sorted(rlang.poi_vars),
        }
    except ReuseError:
        pass
    return desc


@dataclass
class _Posted:
    body_canon: str
    envelope: dict = field(default_factory=dict)


def create_app(
    config: ServiceConfig | None = None, engine: ReuseEngine | None = None
) -> FastAPI:
    config = config or ServiceConfig()
    engine = engine or build_runtime(config)
    app = FastAPI(title="experiment reuse service", docs_url=None, redoc_url=None)
    app.state.engine = engine
    lock = threading.Lock()
    posted: dict[str, _Posted] = {}
    started = time.time()

    def _error(status: int, exc: Exception) -> JSONResponse:
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.post("/query")
    async def post_query(request: HttpRequest):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"error": "MalformedBody"})
        if not isinstance(body, dict) or "requestId" not in body or "query" not in body:
            return JSONResponse(
                status_code=400,
                content={"error": "MalformedBody", "detail": "need requestId and query"},
            )
        request_id = str(body["requestId"])
        body_canon = canon_dumps(body["query"])
        with lock:
            known = posted.get(request_id)
            if known is not None:
                if known.body_canon != body_canon:
                    return JSONResponse(
                        status_code=400,
                        content={
                            "error": "RequestIdConflict",
                            "detail": "requestId was already used with a different query",
                        },
                    )
                return JSONResponse(content=known.envelope)
            try:
                q = decode_query(body["query"])
            except ReuseError as exc:
                return _error(400, exc)
            except Exception as exc:
                return _error(400, DomainViolation(f"undecodable query: {exc}"))
            try:
                report = engine.process(q)
            except ExecutionFailure as exc:
                return _error(500, exc)
            except ReuseError as exc:
                return _error(400, exc)
            envelope = {
                "requestId": request_id,
                "queryKey": query_key(q),
                "answer": canon_answer(report.answer),
                "executed": report.executed,
                "reused": report.reused,
                "mechanism": report.mechanism(),
                "events": {"first": report.first_seq, "last": report.last_seq},
            }
            posted[request_id] = _Posted(body_canon=body_canon, envelope=envelope)
        return JSONResponse(content=envelope)

    @app.get("/stats")
    def get_stats():
        with lock:
            stats = engine.store.stats.to_dict()
        return {
            "store": stats,
            "events": engine.events.last_seq,
            "uptimeS": round(time.time() - started, 3),
            "languages": sorted(engine.registry.query_language_ids()),
        }

    @app.post("/admin/purge")
    def post_purge():
        with lock:
            removed = engine.store.purge_ttl()
        return {"removed": removed}

    @app.get("/languages")
    def get_languages():
        ids = sorted(engine.registry.query_language_ids())
        return {"languages": [_language_descriptor(engine.registry, i) for i in ids]}

    @app.get("/languages/{lang_id}")
    def get_language(lang_id: str):
        try:
            return _language_descriptor(engine.registry, lang_id)
        except UnknownLanguage as exc:
            return _error(404, exc)

    @app.get("/events")
    def get_events(since: int = 0, follow: bool = False, idle_timeout: float = 2.0):
        replayed = [e.to_dict() for e in engine.events.since(since)]
        if not follow:
            return {"events": replayed, "lastSeq": engine.events.last_seq}

        q: queue.Queue = queue.Queue()
        engine.events.subscribe(q.put)

        def stream() -> Iterator[str]:
            try:
                for ev in replayed:
                    yield json.dumps(ev) + "\n"
                deadline = min(max(idle_timeout, 0.1), 30.0)
                while True:
                    try:
                        ev = q.get(timeout=deadline)
                    except queue.Empty:
                        break
                    yield json.dumps(ev.to_dict()) + "\n"
            finally:
                engine.events.unsubscribe(q.put)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    if config.console_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=config.console_dir, html=True))

    return app


def run(config: ServiceConfig | None = None) -> None:
    """Blocking single-process server."""
    import uvicorn

    config = config or ServiceConfig()
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
