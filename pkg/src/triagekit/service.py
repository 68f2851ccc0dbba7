"""REST suggestion service.

Endpoints (JSON over HTTP, UTF-8):

* ``POST /v1/suggest`` - triage one description against the loaded bundle
* ``POST /v1/assignments`` - record a confirmed human assignment
* ``GET /v1/health`` - 200 once the bundle is loaded, 503 before
* ``GET /v1/metrics`` - per-endpoint latency summaries

The bundle is immutable and shared across requests; assignment records go
to a durable append-only JSON-Lines log guarded by a single writer lock.
Malformed request bodies return 400; a description that cleans to nothing
returns 422 with a machine-readable reason; descriptions over 32 KiB
return 413.
"""

import contextlib
import json
import os
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .pipeline import EmptyDescriptionError, load_bundle, suggest

__all__ = ["create_app", "serve", "AssignmentLog", "MAX_DESCRIPTION_BYTES"]

MAX_DESCRIPTION_BYTES = 32 * 1024


class SuggestRequest(BaseModel):
    description: str
    k_group: int = Field(default=3, ge=1)
    k_resolver: int = Field(default=5, ge=1)
    n_similar: int = Field(default=10, ge=0)


class AssignmentRequest(BaseModel):
    description: str = Field(min_length=1)
    suggested_groups: list[str] = Field(default_factory=list)
    suggested_resolvers: list[str] = Field(default_factory=list)
    chosen_group: str = Field(min_length=1)
    chosen_resolver: str = Field(min_length=1)
    chooser: str = Field(default="")
    timestamp: str | None = None


class AssignmentLog:
    """Durable append-only record log; one JSON object per line.

    Sequence numbers continue across restarts (existing lines are counted
    at open) and timestamps are kept monotone within one file.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seq = 0
        self._last_timestamp = ""
        if self.path.exists():
            with open(self.path, "r", encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        self._seq += 1
                        try:
                            self._last_timestamp = json.loads(line).get(
                                "timestamp", self._last_timestamp)
                        except json.JSONDecodeError:
                            pass

    def append(self, record):
        """Append one record; returns its sequence number."""
        from datetime import datetime, timezone

        with self._lock:
            ts = record.get("timestamp")
            if ts is None:
                ts = datetime.now(timezone.utc).isoformat()
                if self._last_timestamp and ts < self._last_timestamp:
                    ts = self._last_timestamp
            elif self._last_timestamp and ts < self._last_timestamp:
                raise ValueError(
                    f"timestamp {ts} is older than the last logged record"
                )
            seq = self._seq
            payload = dict(record)
            payload["timestamp"] = ts
            payload["seq"] = seq
            line = json.dumps(payload, sort_keys=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())
            self._seq += 1
            self._last_timestamp = ts
            return seq


def _percentile(values, q):
    return float(np.percentile(np.asarray(values), q)) if values else 0.0


def create_app(bundle_dir=None, bundle=None, assignment_log=None):
    """Build the FastAPI app.

    Pass a loaded ``bundle`` directly or a ``bundle_dir`` to load on
    startup; until the bundle is in place, /v1/health and /v1/suggest
    answer 503.
    """
    @contextlib.asynccontextmanager
    async def _lifespan(app):
        if app.state.bundle is None and app.state.bundle_dir is not None:
            app.state.bundle = load_bundle(app.state.bundle_dir)
        if app.state.bundle is not None:
            # one throwaway call warms the jitted index traversal so the
            # first real request is not the one paying compilation costs
            suggest(app.state.bundle, "warmup", k_group=1, k_resolver=1,
                    n_similar=1)
        yield

    app = FastAPI(title="triagekit suggestion service", lifespan=_lifespan)
    # The triage console may be served from any static host; the service
    # itself carries no credentials (auth is an explicit non-goal).
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.bundle = bundle
    app.state.bundle_dir = bundle_dir
    app.state.latencies = {}
    app.state.latency_lock = threading.Lock()
    log_path = assignment_log or (
        Path(bundle_dir) / "assignments.log" if bundle_dir else
        Path("assignments.log")
    )
    app.state.assignment_log = AssignmentLog(log_path)

    @app.exception_handler(RequestValidationError)
    def _validation_handler(request, exc):
        # Spec'd contract: malformed bodies are a client error, 400.
        return JSONResponse(
            status_code=400,
            content={"error": "malformed_request", "detail": exc.errors()},
        )

    @app.middleware("http")
    async def _timing(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        elapsed = (time.perf_counter() - t0) * 1e3
        with app.state.latency_lock:
            app.state.latencies.setdefault(request.url.path, []).append(elapsed)
        return response

    @app.get("/v1/health")
    def health():
        if app.state.bundle is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        version = app.state.bundle.manifest.get("config_hash", "")[:16]
        return {"status": "ok", "bundle_version": version}

    @app.post("/v1/suggest")
    def handle_suggest(body: SuggestRequest):
        if app.state.bundle is None:
            return JSONResponse(
                status_code=503, content={"error": "bundle_not_loaded"}
            )
        if len(body.description.encode("utf-8")) > MAX_DESCRIPTION_BYTES:
            return JSONResponse(
                status_code=413,
                content={"error": "description_too_large",
                         "limit_bytes": MAX_DESCRIPTION_BYTES},
            )
        try:
            result = suggest(
                app.state.bundle, body.description,
                k_group=body.k_group, k_resolver=body.k_resolver,
                n_similar=body.n_similar,
            )
        except EmptyDescriptionError:
            return JSONResponse(
                status_code=422,
                content={"error": EmptyDescriptionError.reason},
            )
        return {
            "groups": [{"name": g, "score": p} for g, p in result.groups],
            "resolvers": [{"name": r, "score": p} for r, p in result.resolvers],
            "similar": [
                {
                    "id": s.ticket_id,
                    "snippet": s.snippet,
                    "resolver": s.resolver,
                    "distance": s.distance,
                }
                for s in result.similar
            ],
            "timings_ms": {k: round(v, 3) for k, v in result.timings_ms.items()},
        }

    @app.post("/v1/assignments")
    def record_assignment(body: AssignmentRequest):
        try:
            seq = app.state.assignment_log.append(body.model_dump())
        except ValueError as exc:
            return JSONResponse(
                status_code=400,
                content={"error": "invalid_record", "detail": str(exc)},
            )
        except OSError as exc:
            return JSONResponse(
                status_code=503,
                content={"error": "storage_failure", "detail": str(exc),
                         "retry": True},
            )
        return {"seq": seq}

    @app.get("/v1/metrics")
    def metrics():
        with app.state.latency_lock:
            snapshot = {k: list(v) for k, v in app.state.latencies.items()}
        return {
            path: {
                "count": len(values),
                "p50_ms": round(_percentile(values, 50), 3),
                "p95_ms": round(_percentile(values, 95), 3),
            }
            for path, values in snapshot.items()
        }

    return app


def serve(bundle_dir, bind="127.0.0.1:8000", assignment_log=None):
    """Load a bundle and serve it; blocks until shutdown."""
    import uvicorn

    host, _, port = bind.rpartition(":")
    app = create_app(bundle_dir=bundle_dir, assignment_log=assignment_log)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
