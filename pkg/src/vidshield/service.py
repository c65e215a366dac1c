"""HTTP front end for the simulated annotator.

Routes::

    POST /v1/videos:annotate   body = Y4M bytes -> AnnotationResult JSON
    GET  /healthz              200 "ok" once a model is loaded, 503 before

Every non-200 response carries ``{"error": {"kind": ..., "message": ...}}``.
"""

from __future__ import annotations

import logging
import os
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from starlette.concurrency import run_in_threadpool
from starlette.exceptions import HTTPException as StarletteHTTPException

from .annotator import AnnotatorConfig, annotate
from .errors import VideoFormatError
from .labeler import LabelModel
from .video_io import parse_y4m

__all__ = ["ServiceConfig", "ServiceState", "create_app", "MODEL_ENV_VAR"]

log = logging.getLogger(__name__)

MODEL_ENV_VAR = "VIDSHIELD_MODEL"
DEFAULT_MAX_BODY = 256 * 1024 * 1024


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    model_path: Path | None = None
    annotator: AnnotatorConfig = field(default_factory=AnnotatorConfig)
    max_body: int = DEFAULT_MAX_BODY

    def __post_init__(self):
        if self.max_body <= 0:
            raise ValueError("max_body must be positive")


class ServiceState:
    """Holds the (immutable) model once it is available."""

    def __init__(self, model: LabelModel | None = None):
        self.model = model
        self.load_error: str | None = None

    def load(self, path: Path) -> None:
        try:
            self.model = LabelModel.from_json(Path(path).read_text())
            log.info("model loaded from %s", path)
        except (OSError, ValueError) as exc:
            self.load_error = str(exc)
            log.error("failed to load model from %s: %s", path, exc)


def _error(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"kind": kind, "message": message}}, status_code=status)


class _BodyTooLarge(Exception):
    pass


async def _read_body(request: Request, limit: int) -> bytes:
    declared = request.headers.get("content-length")
    if declared is not None and declared.isdigit() and int(declared) > limit:
        raise _BodyTooLarge
    chunks = []
    size = 0
    async for chunk in request.stream():
        size += len(chunk)
        if size > limit:
            raise _BodyTooLarge
        chunks.append(chunk)
    return b"".join(chunks)


def create_app(config: ServiceConfig | None = None, model: LabelModel | None = None) -> FastAPI:
    """Build the ASGI app.

    With ``config.model_path`` set (and no ``model`` given) the model loads
    in a background thread at startup; requests see 503 until it is ready.
    """
    config = config or ServiceConfig()
    state = ServiceState(model)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if state.model is None and config.model_path is not None:
            threading.Thread(target=state.load, args=(config.model_path,), daemon=True).start()
        yield

    app = FastAPI(title="vidshield", lifespan=lifespan)
    app.state.vidshield = state

    @app.exception_handler(StarletteHTTPException)
    async def http_error(request: Request, exc: StarletteHTTPException):
        return _error(exc.status_code, "HTTPError", str(exc.detail))

    @app.get("/healthz")
    async def healthz():
        if state.model is None:
            return _error(503, "ModelNotLoaded", state.load_error or "model not loaded")
        return PlainTextResponse("ok")

    @app.post("/v1/videos:annotate")
    async def annotate_video(request: Request):
        try:
            body = await _read_body(request, config.max_body)
        except _BodyTooLarge:
            return _error(413, "PayloadTooLarge", f"body exceeds {config.max_body} bytes")
        model = state.model
        if model is None:
            return _error(503, "ModelNotLoaded", state.load_error or "model not loaded")
        try:
            clip = await run_in_threadpool(parse_y4m, body)
        except VideoFormatError as exc:
            return _error(400, exc.kind, str(exc))
        result = await run_in_threadpool(annotate, clip, model, config.annotator)
        return Response(content=result.to_json().encode("utf-8"), media_type="application/json")

    return app


def model_path_from_env() -> Path | None:
    value = os.environ.get(MODEL_ENV_VAR)
    return Path(value) if value else None
