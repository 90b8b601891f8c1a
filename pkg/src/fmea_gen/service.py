"""HTTP+JSON API over the workflow engine and the corpus store.

All error responses share one shape: {"code", "message", "detail"} with a
status code derived from the error code, so clients can branch on `code`
without parsing prose.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import model
from .errors import FmeaError, NotFoundError
from .workflow import WorkflowEngine

DEFAULT_PORT = 8080

_STATUS_BY_CODE = {
    "NOT_FOUND": 404,
    "EMPTY_INPUT": 400,
    "UNKNOWN_EXAMPLE": 400,
    "EMPTY_TEXT": 400,
    "STEP_LOCKED": 409,
    "STEP_NOT_GENERATED": 409,
    "SHOTS_NOT_CONFIRMED": 409,
    "DUPLICATE_ID": 409,
    "EMPTY_POOL": 409,
    "EMPTY_CORPUS": 409,
    "MISSING_STEP_DATA": 409,
    "INVALID_DOCUMENT": 422,
    "GENERATION_FAILED": 502,
    "PROVIDER_UNAVAILABLE": 502,
    "PROVIDER_TIMEOUT": 502,
    "PROVIDER_HTTP_ERROR": 502,
}


class CreateSessionBody(BaseModel):
    short_description: str


class ShotsBody(BaseModel):
    doc_ids: list[str]


class GenerateBody(BaseModel):
    providers: list[str] | None = None
    vote_threshold: float | None = Field(default=None, gt=0.0, le=1.0)
    fuzzy_threshold: float | None = Field(default=None, ge=0.0, le=1.0)


class ReviewBody(BaseModel):
    accepted_items: list[str]
    description: str | None = None


class FinalizeBody(BaseModel):
    skip: list[str] = Field(default_factory=list)


def _error_response(code: str, message: str, detail, status: int) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


def create_app(engine: WorkflowEngine, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="fmea-gen", docs_url=None, redoc_url=None)

    @app.exception_handler(FmeaError)
    async def handle_fmea_error(request: Request, exc: FmeaError):
        return _error_response(exc.code, exc.message, exc.detail, _STATUS_BY_CODE.get(exc.code, 500))

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, exc: ValueError):
        return _error_response("BAD_REQUEST", str(exc), None, 400)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return _error_response("BAD_REQUEST", "request body or parameters failed validation", exc.errors(), 400)

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = engine.create_session(body.short_description)
        return session.to_json_dict()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return engine.get_session(session_id).to_json_dict()

    @app.get("/sessions/{session_id}/steps/{step}/candidates")
    def get_candidates(session_id: str, step: str, k: int | None = None):
        candidates = engine.get_candidates(session_id, step, k)
        return {"step": step, "candidates": candidates}

    @app.put("/sessions/{session_id}/steps/{step}/shots")
    def confirm_shots(session_id: str, step: str, body: ShotsBody):
        confirmed = engine.confirm_shots(session_id, step, body.doc_ids)
        return {"step": step, "confirmed_shots": confirmed}

    @app.post("/sessions/{session_id}/steps/{step}/generate")
    def generate(session_id: str, step: str, body: GenerateBody | None = None):
        body = body or GenerateBody()
        result = engine.generate(
            session_id,
            step,
            provider_ids=body.providers,
            vote_threshold=body.vote_threshold,
            fuzzy_threshold=body.fuzzy_threshold,
        )
        return {"step": step, "result": result}

    @app.post("/sessions/{session_id}/steps/{step}/review")
    def review(session_id: str, step: str, body: ReviewBody):
        session = engine.review(session_id, step, body.accepted_items, body.description)
        return session.to_json_dict()

    @app.post("/sessions/{session_id}/finalize")
    def finalize(session_id: str, body: FinalizeBody | None = None):
        body = body or FinalizeBody()
        doc_id = engine.finalize(session_id, body.skip)
        return {"doc_id": doc_id}

    @app.get("/documents")
    def list_documents():
        docs = engine.store.documents()
        return {
            "documents": [
                {
                    "doc_id": doc.doc_id,
                    "equipment_name": doc.equipment_name,
                    "short_description": doc.short_description,
                    "provenance": doc.provenance,
                }
                for doc in docs
            ]
        }

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        return model.to_json_dict(engine.store.get(doc_id))

    if ui_dir is not None:
        ui_path = Path(ui_dir)
        if not ui_path.is_dir():
            raise NotFoundError(f"ui directory {ui_path} does not exist")
        app.mount("/ui", StaticFiles(directory=str(ui_path), html=True), name="ui")

    return app
