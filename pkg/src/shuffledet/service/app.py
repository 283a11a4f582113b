"""FastAPI application exposing the detection engine."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import EngineError
from . import handlers, schemas


def create_app() -> FastAPI:
    app = FastAPI(title="shuffledet service", version="0.1.0")

    def guarded(fn, *args):
        try:
            return fn(*args)
        except EngineError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/detect", response_model=schemas.DetectResponse)
    def detect(req: schemas.DetectRequest):
        return guarded(handlers.handle_detect, req)

    @app.post("/flops", response_model=schemas.FlopsResponse)
    def flops(req: schemas.FlopsRequest):
        return guarded(handlers.handle_flops, req)

    @app.post("/priors", response_model=schemas.PriorsResponse)
    def priors(req: schemas.PriorsRequest):
        return guarded(handlers.handle_priors, req)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        return guarded(handlers.handle_eval, req)

    @app.post("/selftest", response_model=schemas.SelftestResponse)
    def selftest():
        return handlers.handle_selftest()

    return app


app = create_app()
