"""FastAPI application serving text embeddings.

``POST /embed`` returns vectors in request order; ``GET /health`` reports
503 until the encoder has loaded and 200 afterwards.  Inference runs behind
a single lock, so concurrent requests are serialized; clients get
throughput by batching (up to 256 texts per call).
"""

from __future__ import annotations

import argparse
import threading

from fastapi import FastAPI, Response
from pydantic import BaseModel, Field

from .encoder import load_encoder

MAX_BATCH = 256
DEFAULT_CHECKPOINT = "princeton-nlp/sup-simcse-bert-base-uncased"


class EmbedRequest(BaseModel):
    texts: list[str]


class EmbedResponse(BaseModel):
    dim: int
    vectors: list[list[float]]
    model: str


class HealthResponse(BaseModel):
    status: str
    model: str
    dim: int = Field(default=0)


class ErrorResponse(BaseModel):
    detail: str


def create_app(checkpoint: str, preload: bool = True) -> FastAPI:
    app = FastAPI(title="embed-service")
    app.state.checkpoint = checkpoint
    app.state.encoder = None
    app.state.inference_lock = threading.Lock()

    def load() -> None:
        if app.state.encoder is None:
            app.state.encoder = load_encoder(app.state.checkpoint)

    app.state.load = load
    if preload:
        load()

    @app.get("/health", responses={503: {"model": HealthResponse}})
    def health(response: Response) -> HealthResponse:
        enc = app.state.encoder
        if enc is None:
            response.status_code = 503
            return HealthResponse(status="loading", model=app.state.checkpoint)
        return HealthResponse(status="ok", model=enc.model_id, dim=enc.dim)

    @app.post(
        "/embed",
        responses={400: {"model": ErrorResponse}, 503: {"model": ErrorResponse}},
    )
    def embed(request: EmbedRequest, response: Response):
        enc = app.state.encoder
        if enc is None:
            response.status_code = 503
            return ErrorResponse(detail="model not loaded")
        if not request.texts:
            response.status_code = 400
            return ErrorResponse(detail="texts must be non-empty")
        if len(request.texts) > MAX_BATCH:
            response.status_code = 400
            return ErrorResponse(
                detail=f"batch of {len(request.texts)} exceeds {MAX_BATCH}"
            )
        with app.state.inference_lock:
            vectors = enc.encode(request.texts)
        return EmbedResponse(dim=enc.dim, vectors=vectors, model=enc.model_id)

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Serve text embeddings over HTTP.")
    parser.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT,
                        help="Encoder id: a sentence-transformers checkpoint "
                             "or hashed-bow-<dim> for the offline encoder.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8200)
    args = parser.parse_args(argv)

    import uvicorn

    uvicorn.run(create_app(args.checkpoint), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
