"""HTTP access to the batch pipeline.

JSON bodies, UTF-8. Errors come back as {"code", "message"} with 400 for bad
input, 404 for unknown jobs, 409 for results requested before completion.
POST /v1/batches ingests and runs the pipeline before answering, so a 201
always references a finished (completed or failed) job.
"""
from __future__ import annotations

import json

from fastapi import FastAPI, Query, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse, PlainTextResponse

from .canonical import SynonymLexicon
from .detection import CentroidBoundaryDetector
from .embeddings import Utterance, read_utterances
from .errors import JobNotCompleted, JobNotFound, OirError, ParseError
from .labeling import Lexicon
from .pipeline import PipelineConfig, export_report, query_results, run_pipeline
from .store import Store
from .text import Vocabulary


def _error_response(exc: OirError) -> JSONResponse:
    if isinstance(exc, JobNotFound):
        status = 404
    elif isinstance(exc, JobNotCompleted):
        status = 409
    else:
        status = 400
    code = type(exc).__name__
    return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})


def _parse_batch_body(body: bytes) -> list[Utterance]:
    text = body.decode("utf-8").strip()
    if not text:
        raise ParseError(1, "empty request body")
    if text.startswith("["):
        try:
            items = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(1, f"invalid JSON array: {e.msg}") from e
        lines = [json.dumps(obj) for obj in items]
        return read_utterances(lines)
    return read_utterances(text.splitlines())


def create_app(
    store: Store,
    detector: CentroidBoundaryDetector,
    vocab: Vocabulary | None = None,
    config: PipelineConfig | None = None,
    lexicon: Lexicon | None = None,
    synonyms: SynonymLexicon | None = None,
) -> FastAPI:
    app = FastAPI(title="oir", docs_url=None, redoc_url=None)
    cfg = config or PipelineConfig()

    @app.exception_handler(OirError)
    async def _oir_error(request: Request, exc: OirError):
        return _error_response(exc)

    @app.post("/v1/batches", status_code=201)
    async def create_batch(request: Request):
        body = await request.body()
        utterances = _parse_batch_body(body)
        job = store.create_job(utterances, cfg.snapshot())
        # pipeline work happens off the event loop; concurrent jobs don't block
        await run_in_threadpool(
            run_pipeline, store, job.id, detector,
            vocab=vocab, config=cfg, lexicon=lexicon, synonyms=synonyms,
        )
        return {"job_id": job.id}

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        return store.get_job(job_id).to_dict()

    @app.get("/v1/jobs/{job_id}/results")
    def get_results(
        job_id: str,
        label: str | None = None,
        source: str | None = None,
        min_confidence: float | None = Query(default=None),
        limit: int = 100,
        offset: int = 0,
    ):
        try:
            page = query_results(
                store, job_id, label=label, source=source,
                min_confidence=min_confidence, limit=limit, offset=offset,
            )
        except ValueError as e:
            return JSONResponse(status_code=400, content={"code": "BadRequest", "message": str(e)})
        return page.to_dict()

    @app.get("/v1/jobs/{job_id}/report")
    def get_report(job_id: str, format: str = "csv"):
        if format not in ("csv", "json"):
            return JSONResponse(
                status_code=400,
                content={"code": "BadRequest", "message": f"unknown format {format!r}"},
            )
        text = export_report(store, job_id, format=format)
        media = "text/csv" if format == "csv" else "application/json"
        return PlainTextResponse(content=text, media_type=media)

    @app.get("/v1/intents")
    def get_intents():
        return {
            "labels": [
                {
                    "label": lab,
                    "radius": float(r),
                    "count": int(detector.counts_.get(lab, 0)),
                }
                for lab, r in zip(detector.labels_, detector.radii_)
            ]
        }

    return app


def serve(app: FastAPI, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
