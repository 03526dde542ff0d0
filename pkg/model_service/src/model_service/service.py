"""The HTTP service: /score, /generate, /health, and their batch variants.

Request and response shapes mirror schemas/model_service_protocol.json
exactly; pydantic enforces them with unknown fields rejected. Schema
violations return 400 with field-level messages. Model failures return 500
with an opaque incident id and a server-side log entry. In deterministic
mode seeds are fixed and sampling is disabled, so two service starts on the
same checkpoints produce identical outputs.
"""

from __future__ import annotations

import logging
import uuid
from pathlib import Path
from typing import Literal

import torch
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .models import load_checkpoint
from .vocab import SEP, encode_discourse

logger = logging.getLogger(__name__)

CLASSIFIER_FILE = "classifier.pt"
GENERATOR_FILE = "generator.pt"


class ScoreRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    sentences: list[str] = Field(min_length=1)


class ScoreResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")
    coherence: float = Field(ge=0.0, le=1.0)
    model_id: str


class GenerateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    context_sentences: list[str] = Field(min_length=1)
    mask_side: Literal["prefix_kept", "suffix_kept"]
    max_new_tokens: int = Field(ge=1)
    temperature: float = Field(ge=0.0)


class GenerateResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")
    substitute: str
    model_id: str


class ModelIds(BaseModel):
    model_config = ConfigDict(extra="forbid")
    generator: str
    classifier: str


class HealthResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")
    status: Literal["ok"]
    model_ids: ModelIds


class ScoreBatchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    items: list[ScoreRequest] = Field(min_length=1, max_length=64)


class ScoreBatchResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")
    items: list[ScoreResponse]


class GenerateBatchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    items: list[GenerateRequest] = Field(min_length=1, max_length=64)


class GenerateBatchResponse(BaseModel):
    model_config = ConfigDict(extra="forbid")
    items: list[GenerateResponse]


class _Runtime:
    """Loaded models plus the decoding policy."""

    def __init__(self, checkpoint_dir: str | Path, deterministic: bool):
        checkpoint_dir = Path(checkpoint_dir)
        self.classifier, self.classifier_vocab, self.classifier_id = load_checkpoint(
            checkpoint_dir / CLASSIFIER_FILE
        )
        self.generator, self.generator_vocab, self.generator_id = load_checkpoint(
            checkpoint_dir / GENERATOR_FILE
        )
        self.deterministic = deterministic
        self.rng = torch.Generator()
        self.rng.manual_seed(0 if deterministic else torch.seed())

    def score(self, sentences: list[str]) -> float:
        ids = encode_discourse(self.classifier_vocab, sentences)
        batch = torch.tensor([ids or [0]], dtype=torch.long)
        with torch.no_grad():
            value = float(self.classifier.coherence(batch)[0])
        return min(1.0, max(0.0, value))

    def generate(self, request: GenerateRequest) -> str:
        vocab = self.generator_vocab
        context = encode_discourse(vocab, request.context_sentences)
        if request.mask_side == "prefix_kept":
            context = context + [SEP]
        else:
            context = [SEP] + context
        temperature = 0.0 if self.deterministic else request.temperature
        ids = self.generator.generate(
            torch.tensor(context, dtype=torch.long),
            max_new_tokens=request.max_new_tokens,
            temperature=temperature,
            rng=self.rng,
        )
        return vocab.decode(ids)


def create_app(checkpoint_dir: str | Path, deterministic: bool = True) -> FastAPI:
    runtime = _Runtime(checkpoint_dir, deterministic)
    app = FastAPI(title="coherence model service")
    app.state.runtime = runtime

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        detail = [
            {"field": ".".join(str(part) for part in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    def guarded(fn):
        try:
            return fn()
        except Exception:
            incident = uuid.uuid4().hex[:12]
            logger.exception("model failure, incident %s", incident)
            raise HTTPException(status_code=500, detail=f"internal error {incident}")

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            status="ok",
            model_ids=ModelIds(
                generator=runtime.generator_id, classifier=runtime.classifier_id
            ),
        )

    @app.post("/score", response_model=ScoreResponse)
    def score(request: ScoreRequest) -> ScoreResponse:
        value = guarded(lambda: runtime.score(request.sentences))
        return ScoreResponse(coherence=value, model_id=runtime.classifier_id)

    @app.post("/generate", response_model=GenerateResponse)
    def generate(request: GenerateRequest) -> GenerateResponse:
        substitute = guarded(lambda: runtime.generate(request))
        return GenerateResponse(substitute=substitute, model_id=runtime.generator_id)

    @app.post("/score_batch", response_model=ScoreBatchResponse)
    def score_batch(request: ScoreBatchRequest) -> ScoreBatchResponse:
        items = [
            ScoreResponse(
                coherence=guarded(lambda item=item: runtime.score(item.sentences)),
                model_id=runtime.classifier_id,
            )
            for item in request.items
        ]
        return ScoreBatchResponse(items=items)

    @app.post("/generate_batch", response_model=GenerateBatchResponse)
    def generate_batch(request: GenerateBatchRequest) -> GenerateBatchResponse:
        items = [
            GenerateResponse(
                substitute=guarded(lambda item=item: runtime.generate(item)),
                model_id=runtime.generator_id,
            )
            for item in request.items
        ]
        return GenerateBatchResponse(items=items)

    return app
