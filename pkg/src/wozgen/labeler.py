"""Multiple-choice state labeling: query construction, scoring, annotation.

Each turn asks one question per informable slot plus one domain question.
Query text for one option is laid out as

    <s> {dialogue prefix} </s> {question} </s> {option} </s>

transported over the wire as separate JSON fields (context, question,
options); the flat string is the canonical model-input rendering.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .candidates import (
    DONTCARE_OPTION,
    NONE_OPTION,
    OptionSet,
    StateCandidateSet,
    option_set_for,
)
from .collector import BOS_TOKEN, SEP_TOKEN
from .dialogue import Dialogue, serialize_prefix
from .errors import BackendProtocolError, ConfigError, LabelingError, SchemaError
from .schema import SchemaSet, SlotDef
from .text import normalize_value

LABELER_MAX_CONTEXT_TOKENS = 512
DOMAIN_QUESTION = "what is the domain or topic of current turn?"
DEFAULT_BETA = 5.0


def softmax(logits) -> tuple[float, ...]:
    """Numerically stable softmax."""
    if not logits:
        raise LabelingError("cannot normalize an empty logit vector")
    peak = max(logits)
    exps = [math.exp(x - peak) for x in logits]
    total = sum(exps)
    return tuple(e / total for e in exps)


def argmax_lowest(values) -> int:
    """Index of the maximum; ties break toward the lower index."""
    best, best_i = None, -1
    for i, v in enumerate(values):
        if best is None or v > best:
            best, best_i = v, i
    return best_i


@dataclass(frozen=True)
class MultipleChoiceQuery:
    """One question about one dialogue prefix, with its ordered options."""

    context: str
    question: str
    options: tuple[str, ...]
    slot: str | None = None  # None for the domain question

    def __post_init__(self):
        if not self.options:
            raise LabelingError(f"query {self.question!r} has no options")

    @property
    def serialized_per_option(self) -> tuple[str, ...]:
        return tuple(
            f"{BOS_TOKEN} {self.context} {SEP_TOKEN} {self.question}"
            f" {SEP_TOKEN} {opt} {SEP_TOKEN}"
            for opt in self.options
        )


@dataclass(frozen=True)
class AnswerScores:
    logits: tuple[float, ...]
    probabilities: tuple[float, ...]
    chosen_index: int

    @staticmethod
    def from_logits(logits) -> "AnswerScores":
        probs = softmax(tuple(logits))
        return AnswerScores(
            logits=tuple(logits),
            probabilities=probs,
            chosen_index=argmax_lowest(logits),
        )


@dataclass(frozen=True)
class TurnAnnotation:
    """State and active domain recovered for one turn.

    ``state`` holds (slot, value) pairs in schema slot order; "None" answers
    are omitted, the Dontcare sentinel is stored as "dontcare".
    """

    state: tuple[tuple[str, str], ...]
    active_domain: str

    def state_dict(self) -> dict[str, str]:
        return dict(self.state)


@dataclass(frozen=True)
class LabelerTrainingConfig:
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.beta < 1.0:
            raise ConfigError(f"beta must be at least 1, got {self.beta}")


class LabelerBackend(ABC):
    """An answer scorer reachable in-process or over the wire."""

    max_context_tokens: int = LABELER_MAX_CONTEXT_TOKENS
    deterministic: bool = False

    @abstractmethod
    def score_options(
        self, context: str, question: str, options: tuple[str, ...]
    ) -> tuple[float, ...]:
        """Return one logit per option, in option order."""


def build_slot_query(
    dialogue: Dialogue,
    t: int,
    slot: SlotDef,
    candidates: StateCandidateSet,
    max_context_tokens: int | None = LABELER_MAX_CONTEXT_TOKENS,
) -> MultipleChoiceQuery:
    """The question for one slot at turn t; its description is the question."""
    if not slot.informable:
        raise SchemaError(f"slot {slot.name!r} is requestable and is never labeled")
    options = option_set_for(candidates, slot)
    return MultipleChoiceQuery(
        context=serialize_prefix(dialogue, t, max_context_tokens),
        question=slot.description,
        options=options.options,
        slot=slot.name,
    )


def build_domain_query(
    dialogue: Dialogue,
    t: int,
    domain_options: tuple[str, ...],
    max_context_tokens: int | None = LABELER_MAX_CONTEXT_TOKENS,
) -> MultipleChoiceQuery:
    if not domain_options:
        raise ConfigError("domain option list is empty")
    return MultipleChoiceQuery(
        context=serialize_prefix(dialogue, t, max_context_tokens),
        question=DOMAIN_QUESTION,
        options=tuple(domain_options),
        slot=None,
    )


def score(backend: LabelerBackend, query: MultipleChoiceQuery) -> AnswerScores:
    logits = backend.score_options(query.context, query.question, query.options)
    if len(logits) != len(query.options):
        raise BackendProtocolError(
            f"backend returned {len(logits)} logits for {len(query.options)} options"
        )
    return AnswerScores.from_logits(logits)


def annotate_dialogue(
    dialogue: Dialogue,
    candidates: StateCandidateSet,
    schema: SchemaSet,
    backend: LabelerBackend,
    max_context_tokens: int | None = LABELER_MAX_CONTEXT_TOKENS,
) -> tuple[tuple[str, TurnAnnotation], ...]:
    """Ask every slot question plus the domain question for each turn.

    Returns (context, annotation) per turn, in turn order. Scores are
    assembled keyed by (turn, question) so a concurrent scorer could fill the
    same table in any order.
    """
    slots = schema.informable_slots()
    scored: dict[tuple[int, str], AnswerScores] = {}
    queries: dict[tuple[int, str], MultipleChoiceQuery] = {}
    for t in range(1, len(dialogue) + 1):
        for slot in slots:
            key = (t, slot.name)
            queries[key] = build_slot_query(
                dialogue, t, slot, candidates, max_context_tokens
            )
        queries[(t, "")] = build_domain_query(
            dialogue, t, schema.domain_options, max_context_tokens
        )
    try:
        for key in sorted(queries):
            scored[key] = score(backend, queries[key])
    except (BackendProtocolError, LabelingError) as exc:
        t, qid = key
        raise LabelingError(
            f"annotation failed at turn {t}, question {qid or 'domain'}: {exc}"
        ) from exc

    out: list[tuple[str, TurnAnnotation]] = []
    for t in range(1, len(dialogue) + 1):
        state: list[tuple[str, str]] = []
        for slot in slots:
            query = queries[(t, slot.name)]
            chosen = query.options[scored[(t, slot.name)].chosen_index]
            if chosen == NONE_OPTION:
                continue
            value = "dontcare" if chosen == DONTCARE_OPTION else chosen
            state.append((slot.name, value))
        domain_query = queries[(t, "")]
        domain = domain_query.options[scored[(t, "")].chosen_index]
        out.append(
            (domain_query.context, TurnAnnotation(state=tuple(state), active_domain=domain))
        )
    return tuple(out)


def build_labeler_training_records(
    dialogue: Dialogue,
    gold_states: list[dict[str, str]],
    gold_domains: list[str],
    schema: SchemaSet,
    config: LabelerTrainingConfig = LabelerTrainingConfig(),
    dialogue_id: str = "",
    max_context_tokens: int | None = None,
    candidates: StateCandidateSet | None = None,
) -> list[dict]:
    """Emit one weighted multiple-choice record per (turn, question).

    Option sets come from the dialogue's stored candidate set when given
    (goal plus API values, so records keep their distractor options); the
    fallback is the union of the dialogue's own gold states. Non-None answers
    (and domain answers, which are never None) carry weight beta.
    """
    if len(gold_states) != len(dialogue) or len(gold_domains) != len(dialogue):
        raise LabelingError(
            f"dialogue {dialogue_id or '<unnamed>'}: {len(dialogue)} turns but"
            f" {len(gold_states)} states / {len(gold_domains)} domains"
        )
    if candidates is None:
        union_pairs: list[tuple[str, str]] = []
        for state in gold_states:
            for slot, value in state.items():
                union_pairs.append((slot, value))
        candidates = StateCandidateSet(from_goal=tuple(union_pairs), from_api=())

    records: list[dict] = []
    for t in range(1, len(dialogue) + 1):
        gold = gold_states[t - 1]
        for slot in schema.informable_slots():
            query = build_slot_query(dialogue, t, slot, candidates, max_context_tokens)
            gold_value = gold.get(slot.name)
            options = OptionSet(slot=slot.name, options=query.options)
            if gold_value is None:
                answer_index = options.none_index
            else:
                idx = options.index_of(gold_value)
                if idx is None:
                    raise LabelingError(
                        f"dialogue {dialogue_id or '<unnamed>'} turn {t}: gold value"
                        f" {gold_value!r} for {slot.name!r} missing from its options"
                    )
                answer_index = idx
            is_none = answer_index == options.none_index
            records.append(
                {
                    "context": query.context,
                    "question": query.question,
                    "options": list(query.options),
                    "answer_index": answer_index,
                    "weight": 1.0 if is_none else config.beta,
                    "meta": {"dialogue_id": dialogue_id, "turn": t, "slot": slot.name},
                }
            )
        domain_query = build_domain_query(
            dialogue, t, schema.domain_options, max_context_tokens
        )
        gold_domain = gold_domains[t - 1]
        option = schema.option_for_domain(gold_domain)
        if option is None:
            raise LabelingError(
                f"dialogue {dialogue_id or '<unnamed>'} turn {t}: active domain"
                f" {gold_domain!r} is not among the domain options"
            )
        records.append(
            {
                "context": domain_query.context,
                "question": domain_query.question,
                "options": list(domain_query.options),
                "answer_index": domain_query.options.index(option),
                "weight": config.beta,
                "meta": {"dialogue_id": dialogue_id, "turn": t, "slot": None},
            }
        )
    return records
