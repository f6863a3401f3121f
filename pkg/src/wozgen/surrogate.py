"""Deterministic in-process backends: a rule-based generator and an exact scorer.

The surrogate generator realizes dialogues from a fixed sentence grammar, so
the gold state after every turn is known by construction. The oracle scorer
recovers those states by literal pattern scanning over user utterances. Both
exist to make end-to-end pipeline behavior testable without any model.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .candidates import is_sentinel
from .collector import CollectorBackend, CollectorInput, GenerationParams, GenerationResult
from .dialogue import Dialogue, SYSTEM_TOKEN, Turn, USER_TOKEN, serialize_dialogue
from .errors import GenerationError, LabelingError, SchemaError
from .goals import APICallResultSet, GoalInstruction
from .labeler import DOMAIN_QUESTION, LabelerBackend
from .schema import SchemaSet
from .text import normalize_value

GREETING = "hello , how can i help you ?"
ACKNOWLEDGE = "sure , let me check that ."
CLOSING = "thank you , goodbye ."

SENTENCES_PER_USER_TURN = 2


def looking_sentence(domain: str) -> str:
    return f"i am looking for a {domain} ."


def inform_sentence(slot: str, value: str) -> str:
    return f"the {slot} should be {value} ."


def recommend_sentence(value: str) -> str:
    return f"i recommend {value} ."


def echo_sentence(slot: str, value: str) -> str:
    return f"the {slot} is {value} ."


@dataclass(frozen=True)
class SurrogatePlan:
    """A rule-built dialogue plus its by-construction gold annotations."""

    turns: tuple[Turn, ...]
    states: tuple[tuple[tuple[str, str], ...], ...]
    domains: tuple[str, ...]
    text: str

    def state_dicts(self) -> list[dict[str, str]]:
        return [dict(s) for s in self.states]


def _goal_pairs_by_domain(goal: GoalInstruction) -> list[tuple[str, tuple[str, str]]]:
    """(domain, pair) events in scenario order: goal.domains first, leftovers after."""
    ordered: list[tuple[str, tuple[str, str]]] = []
    remaining = list(goal.explicit_pairs)
    for dom in goal.domains:
        for pair in goal.explicit_pairs:
            if pair[0].split("-", 1)[0] == dom and pair in remaining:
                ordered.append((dom, pair))
                remaining.remove(pair)
    for pair in remaining:
        ordered.append((pair[0].split("-", 1)[0], pair))
    return ordered


def _pick_api_echo(
    goal: GoalInstruction, api: APICallResultSet, schema: SchemaSet
) -> tuple[str, str] | None:
    """First API pair absent from the goal, preferring name slots."""
    goal_keys = {
        (slot, normalize_value(value)) for slot, value in goal.explicit_pairs
    }
    fallback: tuple[str, str] | None = None
    for inst in api.results:
        for slot, value in inst.informable_pairs(schema):
            if (slot, normalize_value(value)) in goal_keys:
                continue
            if slot.endswith("-name"):
                return (slot, value)
            if fallback is None:
                fallback = (slot, value)
    return fallback


def build_plan(
    goal: GoalInstruction, api: APICallResultSet, schema: SchemaSet
) -> SurrogatePlan:
    """Lay out the surrogate dialogue and its cumulative gold states."""
    events = _goal_pairs_by_domain(goal)
    sentences: list[tuple[str, str, tuple[str, str] | None]] = []
    introduced: set[str] = set()
    for dom, pair in events:
        if dom not in introduced:
            introduced.add(dom)
            sentences.append((looking_sentence(dom), dom, None))
        sentences.append((inform_sentence(*pair), dom, pair))
    for dom in goal.domains:
        if dom not in introduced:
            introduced.add(dom)
            sentences.append((looking_sentence(dom), dom, None))

    chunks: list[list[tuple[str, str, tuple[str, str] | None]]] = []
    for i in range(0, len(sentences), SENTENCES_PER_USER_TURN):
        chunks.append(sentences[i : i + SENTENCES_PER_USER_TURN])
    if not chunks:
        chunks = [[]]

    echo = _pick_api_echo(goal, api, schema)
    extra_close_turn = echo is not None and len(chunks) == 1

    turns: list[Turn] = []
    states: list[tuple[tuple[str, str], ...]] = []
    domains: list[str] = []
    running: dict[str, str] = {}
    current_domain = goal.domains[0] if goal.domains else ""

    for i, chunk in enumerate(chunks):
        if i == 0:
            system = GREETING
        elif i == 1 and echo is not None:
            slot, value = echo
            system = (
                recommend_sentence(value) if slot.endswith("-name")
                else echo_sentence(slot, value)
            )
        else:
            system = ACKNOWLEDGE
        user_parts = [s for s, _, _ in chunk]
        for _, dom, pair in chunk:
            current_domain = dom
            if pair is not None:
                running[pair[0]] = pair[1]
        is_last = i == len(chunks) - 1 and not extra_close_turn
        if is_last:
            user_parts.append(CLOSING)
        if not user_parts:
            user_parts = [CLOSING]
        turns.append(Turn(system=system, user=" ".join(user_parts)))
        states.append(tuple(running.items()))
        domains.append(current_domain or (schema.domains[0].domain if schema.domains else ""))

    if extra_close_turn:
        slot, value = echo
        system = (
            recommend_sentence(value) if slot.endswith("-name")
            else echo_sentence(slot, value)
        )
        turns.append(Turn(system=system, user=CLOSING))
        states.append(states[-1])
        domains.append(domains[-1])

    text = serialize_dialogue(Dialogue(turns=tuple(turns)))
    return SurrogatePlan(
        turns=tuple(turns),
        states=tuple(states),
        domains=tuple(domains),
        text=text,
    )


class SurrogateCollectorBackend(CollectorBackend):
    """Rule-based generator; ignores sampling params, fully deterministic."""

    deterministic = True

    def __init__(self, schema: SchemaSet):
        self.schema = schema

    def generate_text(self, input: CollectorInput, params: GenerationParams) -> GenerationResult:
        if input.source_goal is None or input.source_api is None:
            raise GenerationError(
                "surrogate backend requires structured goal and API sources"
            )
        plan = build_plan(input.source_goal, input.source_api, self.schema)
        return GenerationResult(text=plan.text)


def _user_side(context: str) -> str:
    """Concatenated user utterances of a serialized dialogue prefix."""
    words = context.split()
    out: list[str] = []
    in_user = False
    for w in words:
        if w == USER_TOKEN:
            in_user = True
        elif w == SYSTEM_TOKEN:
            in_user = False
        elif in_user:
            out.append(w)
    return " ".join(out)


HIT_LOGIT = 8.0
MISS_LOGIT = 0.0


class OracleLabelerBackend(LabelerBackend):
    """Exact scorer for surrogate dialogues, keyed on the sentence grammar.

    Slot questions are resolved by matching the question text against slot
    descriptions; the chosen option is the one whose inform sentence occurs
    last in the user-side text (longer options win position ties), else None.
    """

    deterministic = True

    def __init__(self, schema: SchemaSet):
        self.schema = schema
        self._slot_by_question: dict[str, str] = {}
        for slot in schema.informable_slots():
            if slot.description in self._slot_by_question:
                raise SchemaError(
                    f"duplicate slot description {slot.description!r};"
                    " the oracle needs unique questions"
                )
            self._slot_by_question[slot.description] = slot.name

    def score_options(
        self, context: str, question: str, options: tuple[str, ...]
    ) -> tuple[float, ...]:
        user_text = _user_side(context)
        if question == DOMAIN_QUESTION:
            chosen = self._domain_index(user_text, options)
        else:
            chosen = self._slot_index(user_text, question, options)
        return tuple(
            HIT_LOGIT if i == chosen else MISS_LOGIT for i in range(len(options))
        )

    def _slot_index(self, user_text: str, question: str, options: tuple[str, ...]) -> int:
        slot = self._slot_by_question.get(question)
        if slot is None:
            raise LabelingError(f"oracle cannot answer unknown question {question!r}")
        best = (-1, -1)
        chosen = None
        for i, option in enumerate(options):
            if is_sentinel(option):
                continue
            pos = user_text.rfind(inform_sentence(slot, option))
            if pos >= 0 and (pos, len(option)) > best:
                best = (pos, len(option))
                chosen = i
        if chosen is not None:
            return chosen
        for i, option in enumerate(options):
            if normalize_value(option) == "none":
                return i
        raise LabelingError(f"option set for {slot!r} lacks a None sentinel")

    def _domain_index(self, user_text: str, options: tuple[str, ...]) -> int:
        best_pos = -1
        best_domain = None
        for dom in self.schema.domain_names:
            pos = max(
                user_text.rfind(looking_sentence(dom)),
                user_text.rfind(f"the {dom}-"),
            )
            if pos > best_pos:
                best_pos = pos
                best_domain = dom
        if best_domain is not None:
            for i, option in enumerate(options):
                if normalize_value(option) == normalize_value(best_domain):
                    return i
        return 0


class RandomLabelerBackend(LabelerBackend):
    """Uniform-random scorer; useful for analytic-expectation checks."""

    deterministic = False

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)

    def score_options(
        self, context: str, question: str, options: tuple[str, ...]
    ) -> tuple[float, ...]:
        return tuple(self._rng.random() for _ in options)
