"""HTTP scoring service.

POST /v1/score takes ``{"payloads": [...]}`` and answers positionally aligned
``{"scores": [...], "labels": [...], "model_id": "..."}``; the decision
threshold lives server-side so clients never interpret raw model output.
GET /v1/health reports readiness.  Malformed requests get 400 with a JSON
error body; batches over the configured cap get 413.  Request handling is
stateless and the model weights are read-only after load, so concurrent
requests are safe.
"""

from __future__ import annotations

from typing import Protocol, Sequence

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

DEFAULT_THRESHOLD = 0.5
DEFAULT_MAX_BATCH = 4096


class Scorer(Protocol):
    model_id: str

    def score_batch(self, payloads: Sequence[str]) -> list[float]: ...


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    payloads: list[str]


class ScoreResponse(BaseModel):
    scores: list[float]
    labels: list[int]
    model_id: str


def create_app(scorer: Scorer, threshold: float = DEFAULT_THRESHOLD,
               max_batch: int = DEFAULT_MAX_BATCH) -> FastAPI:
    app = FastAPI(title="stage2-service")

    @app.exception_handler(RequestValidationError)
    async def bad_request(_: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        if len(request.payloads) > max_batch:
            raise HTTPException(status_code=413,
                                detail=f"batch of {len(request.payloads)} exceeds "
                                       f"the {max_batch}-payload cap")
        scores = scorer.score_batch(request.payloads)
        labels = [1 if s >= threshold else 0 for s in scores]
        return ScoreResponse(scores=scores, labels=labels, model_id=scorer.model_id)

    @app.get("/v1/health")
    def health() -> dict:
        return {"model_id": scorer.model_id, "ready": True,
                "threshold": threshold, "max_batch": max_batch}

    return app
