"""Collector-side plumbing: input serialization, backend interface, generation.

Wire layout for a generation request's input text:

    <s> {goal text} </s> <domain> {domain} <slot> {slot} {value} ... <domain> ...

Special tokens are literal ASCII strings. Goal text, domain names, slot names
and values are escaped so the tokens can never occur inside them.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace

from .dialogue import Dialogue, parse_dialogue, serialize_dialogue
from .errors import (
    CorpusError,
    GenerationError,
    MalformedGenerationError,
    SerializationError,
)
from .goals import APICallResultSet, GoalInstruction, MAX_API_RESULTS
from .kb import KBInstance
from .schema import SchemaSet
from .text import token_count

BOS_TOKEN = "<s>"
SEP_TOKEN = "</s>"
DOMAIN_TOKEN = "<domain>"
SLOT_TOKEN = "<slot>"

COLLECTOR_MAX_INPUT_TOKENS = 768
COLLECTOR_LABEL_SMOOTHING = 0.1
DEFAULT_RETRY_BUDGET = 3

log = logging.getLogger("wozgen.collector")


def escape_field(text: str) -> str:
    """Make a payload string safe: no special token can appear after escaping."""
    return text.replace("&", "&amp;").replace("<", "&lt;")


def unescape_field(text: str) -> str:
    return text.replace("&lt;", "<").replace("&amp;", "&")


@dataclass(frozen=True)
class GenerationParams:
    """Nucleus-sampling knobs passed through to the backend."""

    top_p: float = 0.92
    temperature: float = 1.0
    max_tokens: int = COLLECTOR_MAX_INPUT_TOKENS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.top_p <= 1.0:
            raise GenerationError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.temperature <= 0.0:
            raise GenerationError(f"temperature must be positive, got {self.temperature}")
        if self.max_tokens < 1:
            raise GenerationError(f"max_tokens must be positive, got {self.max_tokens}")


@dataclass(frozen=True)
class CollectorInput:
    """Serialized goal + API results, with references to the structured sources."""

    text: str
    source_goal: GoalInstruction | None = field(default=None, compare=False)
    source_api: APICallResultSet | None = field(default=None, compare=False)


@dataclass(frozen=True)
class GenerationResult:
    text: str
    token_logprobs: tuple[float, ...] | None = None


class CollectorBackend(ABC):
    """A dialogue generator reachable in-process or over the wire.

    Backends receive the full CollectorInput; wire-facing implementations use
    only its text, in-process reference backends may use the structured
    sources.
    """

    max_input_tokens: int = COLLECTOR_MAX_INPUT_TOKENS
    returns_logprobs: bool = False
    deterministic: bool = False

    @abstractmethod
    def generate_text(self, input: "CollectorInput", params: GenerationParams) -> GenerationResult:
        """Produce role-tokenized dialogue text for the serialized input."""


def _ordered_pairs(inst: KBInstance, schema: SchemaSet | None) -> tuple[tuple[str, str], ...]:
    if schema is None or not schema.has_domain(inst.domain):
        return inst.pairs
    order = {s.name: i for i, s in enumerate(schema.domain(inst.domain).slots)}
    known = [p for p in inst.pairs if p[0] in order]
    unknown = [p for p in inst.pairs if p[0] not in order]
    return tuple(sorted(known, key=lambda p: order[p[0]])) + tuple(unknown)


def serialize_input(
    instruction: GoalInstruction,
    results: APICallResultSet,
    schema: SchemaSet | None = None,
) -> CollectorInput:
    """Flatten (G, A) into the generation input string.

    Results keep their sampled order; pairs inside each result follow schema
    slot order when a schema is given, stored order otherwise.
    """
    if len(results) > MAX_API_RESULTS:
        raise SerializationError(
            f"cannot serialize {len(results)} API results (cap {MAX_API_RESULTS})"
        )
    parts = [BOS_TOKEN, escape_field(instruction.text), SEP_TOKEN]
    for inst in results.results:
        parts.append(DOMAIN_TOKEN)
        parts.append(escape_field(inst.domain))
        for slot, value in _ordered_pairs(inst, schema):
            parts.append(SLOT_TOKEN)
            parts.append(escape_field(slot))
            parts.append(escape_field(value))
    return CollectorInput(
        text=" ".join(parts), source_goal=instruction, source_api=results
    )


def parse_input(
    text: str, schema: SchemaSet | None = None
) -> tuple[str, tuple[tuple[str, tuple[tuple[str, str], ...]], ...]]:
    """Invert serialize_input: recover (goal text, ((domain, pairs), ...)).

    The grammar is anchored on the escaped special tokens, so any value or
    goal content round-trips exactly. Slot names containing spaces are split
    from their values against the schema when one is given, else against the
    known multi-word suffixes.
    """
    tokens = text.split()
    if not tokens or tokens[0] != BOS_TOKEN:
        raise SerializationError(f"input must start with {BOS_TOKEN}")
    try:
        sep_at = tokens.index(SEP_TOKEN)
    except ValueError:
        raise SerializationError(f"input lacks the {SEP_TOKEN} separator") from None
    if SEP_TOKEN in tokens[sep_at + 1 :]:
        raise SerializationError(f"input contains more than one {SEP_TOKEN}")
    goal_text = unescape_field(" ".join(tokens[1:sep_at]))

    rest = tokens[sep_at + 1 :]
    results: list[tuple[str, tuple[tuple[str, str], ...]]] = []
    i = 0
    while i < len(rest):
        if rest[i] != DOMAIN_TOKEN:
            raise SerializationError(
                f"expected {DOMAIN_TOKEN} at API-result boundary, got {rest[i]!r}"
            )
        i += 1
        dom_words = []
        while i < len(rest) and rest[i] not in (DOMAIN_TOKEN, SLOT_TOKEN):
            dom_words.append(rest[i])
            i += 1
        domain = unescape_field(" ".join(dom_words))
        pairs: list[tuple[str, str]] = []
        while i < len(rest) and rest[i] == SLOT_TOKEN:
            i += 1
            seg = []
            while i < len(rest) and rest[i] not in (DOMAIN_TOKEN, SLOT_TOKEN):
                seg.append(rest[i])
                i += 1
            if not seg:
                raise SerializationError("empty slot segment in serialized input")
            slot, value = _split_slot_segment(seg, schema)
            pairs.append((slot, value))
        results.append((domain, tuple(pairs)))
    return goal_text, tuple(results)


_SLOT_SPACE_SUFFIXES = ("book people", "book day", "book time", "book stay",
                        "leave at", "arrive by", "entrance fee", "car type")


def _split_slot_segment(seg: list[str], schema: SchemaSet | None) -> tuple[str, str]:
    words = [unescape_field(w) for w in seg]
    if schema is not None:
        for n in range(min(3, len(words) - 1), 0, -1):
            candidate = " ".join(words[:n])
            if schema.has_slot(candidate):
                return candidate, " ".join(words[n:])
    for extra in (2, 1):
        if len(words) - 1 >= extra:
            candidate = " ".join(words[: 1 + extra])
            suffix = candidate.split("-", 1)[1] if "-" in candidate else candidate
            if suffix in _SLOT_SPACE_SUFFIXES:
                return candidate, " ".join(words[1 + extra :])
    return words[0], " ".join(words[1:])


def generate(
    backend: CollectorBackend,
    input: CollectorInput,
    params: GenerationParams,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Dialogue:
    """Run the backend and parse its output, resampling malformed generations.

    Each retry bumps the seed by one so deterministic backends explore a new
    sample; the final failure carries the last raw text.
    """
    length = token_count(input.text)
    if length > backend.max_input_tokens:
        raise GenerationError(
            f"serialized input is {length} tokens, backend cap is"
            f" {backend.max_input_tokens}"
        )
    last_error: MalformedGenerationError | None = None
    for attempt in range(max(1, retry_budget)):
        attempt_params = replace(params, seed=params.seed + attempt)
        result = backend.generate_text(input, attempt_params)
        try:
            return parse_dialogue(result.text)
        except MalformedGenerationError as exc:
            last_error = exc
            log.info("malformed generation on attempt %d: %s", attempt + 1, exc)
    assert last_error is not None
    raise last_error


@dataclass(frozen=True)
class CollectorExample:
    """One training pair for the generation model."""

    source: str
    target: str
    meta: tuple[tuple[str, object], ...] = (("label_smoothing", COLLECTOR_LABEL_SMOOTHING),)

    def as_record(self) -> dict:
        return {"source": self.source, "target": self.target, "meta": dict(self.meta)}


def emit_collector_training_example(
    dialogue: Dialogue,
    instruction: GoalInstruction | None,
    results: APICallResultSet | None,
    schema: SchemaSet | None = None,
) -> CollectorExample:
    """Build the (source, target) pair used to fit the generation model."""
    if instruction is None:
        raise CorpusError("dialogue lacks its goal instruction; cannot emit example")
    api = results if results is not None else APICallResultSet(results=())
    src = serialize_input(instruction, api, schema)
    return CollectorExample(source=src.text, target=serialize_dialogue(dialogue))
