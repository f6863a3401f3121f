"""HTTP clients for the generation and scoring wire protocol.

POST {base}/generate  {input_text, top_p, temperature, max_tokens, seed}
                      -> {text, token_logprobs?}
POST {base}/score     {context, question, options: [str]} -> {logits: [real]}

Error responses carry a JSON body {code, message}. Transport failures and
5xx responses are retried a configurable number of times and then surface as
retryable BackendTransportError; anything structurally wrong in a response is
a BackendProtocolError.
"""

from __future__ import annotations

import time

import requests

from .collector import CollectorBackend, CollectorInput, GenerationParams, GenerationResult
from .errors import BackendProtocolError, BackendTransportError
from .labeler import LABELER_MAX_CONTEXT_TOKENS, LabelerBackend

DEFAULT_TIMEOUT = 60.0
DEFAULT_TRANSPORT_RETRIES = 2


class _HttpClient:
    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT,
        transport_retries: int = DEFAULT_TRANSPORT_RETRIES,
        retry_backoff: float = 0.2,
        session=None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.transport_retries = transport_retries
        self.retry_backoff = retry_backoff
        self.session = session or requests.Session()

    def post(self, endpoint: str, payload: dict) -> dict:
        url = f"{self.base_url}{endpoint}"
        last: Exception | None = None
        for attempt in range(self.transport_retries + 1):
            if attempt and self.retry_backoff:
                time.sleep(self.retry_backoff * attempt)
            try:
                response = self.session.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last = exc
                continue
            if 500 <= response.status_code < 600:
                last = BackendTransportError(
                    f"{url}: server error {response.status_code}: {_error_text(response)}"
                )
                continue
            if response.status_code != 200:
                raise BackendProtocolError(
                    f"{url}: status {response.status_code}: {_error_text(response)}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise BackendProtocolError(f"{url}: non-JSON response body") from exc
            if not isinstance(body, dict):
                raise BackendProtocolError(f"{url}: response is not a JSON object")
            return body
        raise BackendTransportError(
            f"{url}: transport failed after {self.transport_retries + 1} attempts: {last}"
        )


def _error_text(response) -> str:
    try:
        body = response.json()
        return f"{body.get('code', '?')}: {body.get('message', '')}"
    except ValueError:
        return response.text[:200]


class RemoteCollectorBackend(CollectorBackend):
    """Dialogue generation over the wire; uses only the serialized input text."""

    def __init__(
        self,
        base_url: str,
        deterministic: bool = False,
        max_input_tokens: int | None = None,
        **client_kwargs,
    ):
        self._client = _HttpClient(base_url, **client_kwargs)
        self.deterministic = deterministic
        if max_input_tokens is not None:
            self.max_input_tokens = max_input_tokens
        self.returns_logprobs = True  # downgraded on first response without them

    def generate_text(self, input: CollectorInput, params: GenerationParams) -> GenerationResult:
        body = self._client.post(
            "/generate",
            {
                "input_text": input.text,
                "top_p": params.top_p,
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
                "seed": params.seed,
            },
        )
        text = body.get("text")
        if not isinstance(text, str):
            raise BackendProtocolError("/generate response lacks a string 'text' field")
        logprobs = body.get("token_logprobs")
        if logprobs is None:
            self.returns_logprobs = False
            return GenerationResult(text=text)
        if not isinstance(logprobs, list) or not all(
            isinstance(x, (int, float)) for x in logprobs
        ):
            raise BackendProtocolError("'token_logprobs' must be a list of numbers")
        return GenerationResult(text=text, token_logprobs=tuple(float(x) for x in logprobs))


class RemoteLabelerBackend(LabelerBackend):
    """Option scoring over the wire."""

    def __init__(
        self,
        base_url: str,
        deterministic: bool = False,
        max_context_tokens: int = LABELER_MAX_CONTEXT_TOKENS,
        **client_kwargs,
    ):
        self._client = _HttpClient(base_url, **client_kwargs)
        self.deterministic = deterministic
        self.max_context_tokens = max_context_tokens

    def score_options(
        self, context: str, question: str, options: tuple[str, ...]
    ) -> tuple[float, ...]:
        body = self._client.post(
            "/score",
            {"context": context, "question": question, "options": list(options)},
        )
        logits = body.get("logits")
        if not isinstance(logits, list) or not all(
            isinstance(x, (int, float)) for x in logits
        ):
            raise BackendProtocolError("/score response lacks a numeric 'logits' list")
        return tuple(float(x) for x in logits)
