"""HTTP service exposing POST /generate and POST /score.

Error responses always carry the JSON body {code, message}; FastAPI's
default validation shape is rewritten to match. Requests are handled
concurrently (sync endpoints run on the thread pool) and every /generate
call samples from its own seeded generator, so concurrent requests cannot
bleed randomness into each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import BridgeConfigError
from .models import load_checkpoint

# Caps fixed by the wire protocol; a service advertising different ones
# would silently disagree with its clients, so they are not configurable.
GENERATION_MAX_INPUT_TOKENS = 768
SCORING_MAX_CONTEXT_TOKENS = 512


@dataclass(frozen=True)
class ServiceConfig:
    collector_checkpoint: str | None = None
    labeler_checkpoint: str | None = None
    host: str = "127.0.0.1"
    port: int = 8040
    device: str = "cpu"
    deterministic: bool = False
    max_input_tokens: int = GENERATION_MAX_INPUT_TOKENS
    max_context_tokens: int = SCORING_MAX_CONTEXT_TOKENS

    def __post_init__(self):
        if self.max_input_tokens != GENERATION_MAX_INPUT_TOKENS:
            raise BridgeConfigError(
                f"generation input cap is fixed at {GENERATION_MAX_INPUT_TOKENS} tokens"
            )
        if self.max_context_tokens != SCORING_MAX_CONTEXT_TOKENS:
            raise BridgeConfigError(
                f"scoring context cap is fixed at {SCORING_MAX_CONTEXT_TOKENS} tokens"
            )
        if not 1 <= self.port <= 65535:
            raise BridgeConfigError(f"port out of range: {self.port}")
        try:
            torch.device(self.device)
        except RuntimeError as exc:
            raise BridgeConfigError(f"unknown device {self.device!r}: {exc}") from exc


class GenerateRequest(BaseModel):
    input_text: str
    top_p: float = Field(default=0.92, gt=0.0, le=1.0)
    temperature: float = Field(default=1.0, gt=0.0)
    max_tokens: int = Field(default=768, ge=1)
    seed: int = 0


class ScoreRequest(BaseModel):
    context: str
    question: str
    options: list[str] = Field(min_length=1)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(config: ServiceConfig = ServiceConfig(), collector=None, labeler=None) -> FastAPI:
    """Build the app; models come in directly or from checkpoint paths."""
    if collector is None and config.collector_checkpoint:
        collector = load_checkpoint(config.collector_checkpoint, device=config.device)
        if collector.kind != "collector":
            raise BridgeConfigError(
                f"{config.collector_checkpoint}: not a generation checkpoint"
            )
    if labeler is None and config.labeler_checkpoint:
        labeler = load_checkpoint(config.labeler_checkpoint, device=config.device)
        if labeler.kind != "labeler":
            raise BridgeConfigError(f"{config.labeler_checkpoint}: not a scoring checkpoint")

    app = FastAPI(title="wozbridge", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    def _on_validation_error(request: Request, exc: RequestValidationError):
        parts = []
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"] if x != "body")
            parts.append(f"{loc or 'body'}: {err['msg']}")
        return _error(422, "bad_request", "; ".join(parts))

    @app.exception_handler(Exception)
    def _on_internal_error(request: Request, exc: Exception):
        return _error(500, "internal_error", f"{type(exc).__name__}: {exc}")

    @app.post("/generate")
    def generate(body: GenerateRequest):
        if collector is None:
            return _error(503, "model_unavailable", "no generation model is loaded")
        if len(body.input_text.split()) > config.max_input_tokens:
            return _error(
                422,
                "bad_request",
                f"input_text exceeds {config.max_input_tokens} tokens",
            )
        text, logprobs = collector.generate_text_response(
            body.input_text,
            top_p=body.top_p,
            temperature=body.temperature,
            max_tokens=body.max_tokens,
            seed=body.seed,
            deterministic=config.deterministic,
        )
        payload = {"text": text}
        if logprobs is not None:
            payload["token_logprobs"] = logprobs
        return payload

    @app.post("/score")
    def score(body: ScoreRequest):
        if labeler is None:
            return _error(503, "model_unavailable", "no scoring model is loaded")
        if len(body.context.split()) > config.max_context_tokens:
            return _error(
                422,
                "bad_request",
                f"context exceeds {config.max_context_tokens} tokens",
            )
        return {"logits": labeler.score(body.context, body.question, body.options)}

    return app
