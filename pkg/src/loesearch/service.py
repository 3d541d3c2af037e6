"""Read-only HTTP service over an index snapshot and a trained model."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from .classifier import LoEPipeline
from .explain import explain
from .index import FilterBand, Index, load_index, search
from .textproc import tokenize

DEFAULT_MAX_K = 100
DEFAULT_EXPLAIN_SAMPLES = 500
EXPLAIN_TOP_TERMS = 10


@dataclass
class ServiceConfig:
    index_path: str
    model_path: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    default_band: str = "all"
    max_k: int = DEFAULT_MAX_K
    cors_origins: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.max_k < 1:
            raise ValueError("max_k must be at least 1")


def create_app(
    index: Index,
    pipeline: LoEPipeline | None = None,
    default_band: str = "all",
    max_k: int = DEFAULT_MAX_K,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="loesearch")
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    def require_model() -> LoEPipeline:
        if pipeline is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        return pipeline

    def doc_text(payload: dict) -> str:
        title = payload.get("title") or ""
        abstract = payload.get("abstract") or ""
        if not isinstance(title, str) or not isinstance(abstract, str):
            raise HTTPException(status_code=400, detail="title and abstract must be strings")
        text = f"{title} {abstract}".strip()
        if not text:
            raise HTTPException(status_code=400, detail="empty title and abstract")
        return text

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "status": "ok",
            "index_docs": index.n_docs,
            "model_id": pipeline.source if pipeline else None,
        }

    @app.get("/search")
    def handle_search(
        q: str = Query(""),
        band: str = Query(None),
        k: str = Query("10"),
    ) -> list[dict]:
        if not q.strip():
            raise HTTPException(status_code=400, detail="empty query")
        try:
            parsed_band = FilterBand.parse(band if band is not None else default_band)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        try:
            k_value = int(k)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"k must be an integer, got {k!r}") from None
        if k_value < 1:
            raise HTTPException(status_code=400, detail="k must be at least 1")
        if k_value > max_k:
            raise HTTPException(status_code=400, detail=f"k must be at most {max_k}")
        hits = search(index, q, parsed_band, k_value)
        return [
            {
                "doc_id": hit.doc_id,
                "title": hit.title,
                "snippet": hit.snippet,
                "score": hit.score,
                "loe": hit.label.band,
            }
            for hit in hits
        ]

    @app.post("/classify")
    def handle_classify(payload: dict = Body(default={})) -> dict:
        model = require_model()
        prediction = model.predict_text(payload.get("doc_id", ""), doc_text(payload))
        return {
            "band": prediction.chosen.band,
            "ordinal": prediction.chosen.ordinal,
            "confidences": prediction.confidences,
        }

    @app.post("/explain")
    def handle_explain(payload: dict = Body(default={})) -> dict:
        model = require_model()
        text = doc_text(payload)
        terms = tokenize(text)
        if not terms:
            raise HTTPException(status_code=400, detail="document has no indexable terms")
        seed = payload.get("seed")
        if seed is None:
            seed = random.randrange(2**32)
        elif not isinstance(seed, int):
            raise HTTPException(status_code=400, detail="seed must be an integer")
        n_samples = payload.get("n_samples", DEFAULT_EXPLAIN_SAMPLES)
        if not isinstance(n_samples, int) or n_samples < 1:
            raise HTTPException(status_code=400, detail="n_samples must be a positive integer")
        explanation = explain(model.confidence_fn, payload.get("doc_id", ""), terms,
                              n_samples=n_samples, seed=seed)
        return {
            "seed": seed,
            "n_samples": n_samples,
            "terms": {
                band: [[term, weight] for term, weight in pairs[:EXPLAIN_TOP_TERMS]]
                for band, pairs in explanation.term_weights.items()
            },
        }

    return app


def app_from_config(config: ServiceConfig) -> FastAPI:
    """Load artifacts named by the config; paths must exist."""
    if not os.path.exists(config.index_path):
        raise FileNotFoundError(f"index file not found: {config.index_path}")
    index = load_index(config.index_path)
    pipeline = None
    if config.model_path is not None:
        if not os.path.exists(config.model_path):
            raise FileNotFoundError(f"model file not found: {config.model_path}")
        pipeline = LoEPipeline.load(config.model_path)
    return create_app(
        index,
        pipeline,
        default_band=config.default_band,
        max_k=config.max_k,
        cors_origins=config.cors_origins,
    )
