"""Read-only HTTP recommendation service.

The checkpoint directory (weights, manifest, vocab, quote catalog and
prebuilt index) is loaded once at startup; request handling never
mutates state, so responses are pure functions of the request and the
checkpoint fingerprint.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .corpus.builder import load_quote_set
from .corpus.types import Quote
from .encoder import DualEncoder
from .index import QuoteIndex, StaleIndexError
from .ranking import rank_scores, top_k


class RecommendRequest(BaseModel):
    left: str = ""
    right: str = ""
    k: int = Field(default=5, ge=1)


class RecommendedQuote(BaseModel):
    quote_id: int
    quote_text: str
    score: float
    rank: int


class RecommendResponse(BaseModel):
    results: list[RecommendedQuote]
    model_fingerprint: str
    latency_ms: float


@dataclass
class Recommender:
    model: DualEncoder
    catalog: list[Quote]
    index: QuoteIndex

    def __post_init__(self) -> None:
        self._text = {q.id: q.text for q in self.catalog}

    @classmethod
    def load(cls, checkpoint_dir: str | Path) -> "Recommender":
        ckpt = Path(checkpoint_dir)
        model = DualEncoder.load(ckpt)
        catalog = load_quote_set(ckpt / "quotes.jsonl")
        index_path = ckpt / "index.npz"
        if index_path.exists():
            index = QuoteIndex.load(index_path)
            index.verify(model.fingerprint())
        else:
            index = model.build_quote_index(catalog)
        return cls(model=model, catalog=catalog, index=index)

    def recommend(self, left: str, right: str = "", k: int = 5) -> RecommendResponse:
        if k < 1:
            raise ValueError("k must be >= 1")
        start = time.perf_counter()
        vec = self.model.encode_context(left, right)
        scores = rank_scores(vec, self.index, self.model.fingerprint())
        ranked = top_k(scores, min(k, len(self.index)))
        return RecommendResponse(
            results=[
                RecommendedQuote(quote_id=qid, quote_text=self._text[qid],
                                 score=score, rank=rank)
                for qid, score, rank in ranked
            ],
            model_fingerprint=self.model.fingerprint(),
            latency_ms=(time.perf_counter() - start) * 1000.0,
        )


def create_app(recommender: Recommender, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="quoterec")

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "catalog_size": len(recommender.catalog)}

    @app.post("/api/recommend", response_model=RecommendResponse)
    def recommend(req: RecommendRequest) -> RecommendResponse:
        if not req.left.strip() and not req.right.strip():
            raise HTTPException(status_code=400,
                                detail="left or right context must be non-empty")
        try:
            return recommender.recommend(req.left, req.right, req.k)
        except StaleIndexError as e:
            raise HTTPException(status_code=500, detail=str(e)) from e
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e

    @app.post("/api/echo")
    def echo(req: RecommendRequest) -> dict:
        # dev helper: lets the UI verify the left/right split it sends
        return {"left": req.left, "right": req.right, "k": req.k}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def default_ui_dir() -> Path | None:
    """The built frontend bundle, when present next to the repo root."""
    here = Path(__file__).resolve()
    for parent in here.parents:
        candidate = parent / "frontend" / "dist"
        if candidate.is_dir():
            return candidate
    return None
