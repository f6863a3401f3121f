"""State candidates: the closed value universe the labeler chooses from."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SchemaError
from .goals import APICallResultSet, GoalInstruction
from .schema import SchemaSet
from .text import normalize_value

DONTCARE_OPTION = "Dontcare"
NONE_OPTION = "None"
SENTINELS = (DONTCARE_OPTION, NONE_OPTION)


def is_sentinel(value: str) -> bool:
    return normalize_value(value) in ("dontcare", "none")


@dataclass(frozen=True)
class StateCandidateSet:
    """Pairs a labeler may assign: goal-explicit plus API-visible values.

    Pairs keep their first-seen spelling; duplicates collapse on the
    normalized (slot, value) key with goal pairs taking precedence.
    """

    from_goal: tuple[tuple[str, str], ...]
    from_api: tuple[tuple[str, str], ...]

    @property
    def all(self) -> tuple[tuple[str, str], ...]:
        merged: list[tuple[str, str]] = []
        seen: set[tuple[str, str]] = set()
        for slot, value in self.from_goal + self.from_api:
            key = (slot, normalize_value(value))
            if key not in seen:
                seen.add(key)
                merged.append((slot, value))
        return tuple(merged)

    def values_for(self, slot: str) -> tuple[str, ...]:
        return tuple(v for s, v in self.all if s == slot)

    def contains(self, slot: str, value: str) -> bool:
        norm = normalize_value(value)
        return any(
            s == slot and normalize_value(v) == norm for s, v in self.all
        )


@dataclass(frozen=True)
class OptionSet:
    """The ordered answer options for one slot question."""

    slot: str
    options: tuple[str, ...]

    def __post_init__(self):
        for sentinel in SENTINELS:
            if self.options.count(sentinel) != 1:
                raise SchemaError(
                    f"option set for {self.slot!r} must contain {sentinel!r} exactly once"
                )

    def index_of(self, value: str) -> int | None:
        """Index of the option matching ``value`` (normalized), else None."""
        norm = normalize_value(value)
        for i, opt in enumerate(self.options):
            if normalize_value(opt) == norm:
                return i
        return None

    @property
    def none_index(self) -> int:
        return self.options.index(NONE_OPTION)


def candidates_from_goal(
    instruction: GoalInstruction, schema: SchemaSet
) -> tuple[tuple[str, str], ...]:
    """Explicit goal pairs, restricted to informable slots."""
    out = []
    for slot, value in instruction.explicit_pairs:
        if schema.has_slot(slot) and schema.slot(slot).informable:
            out.append((slot, value))
    return tuple(out)


def candidates_from_api(
    results: APICallResultSet, schema: SchemaSet
) -> tuple[tuple[str, str], ...]:
    """Informable slot-value pairs visible in the returned KB instances."""
    out = []
    for inst in results.results:
        out.extend(inst.informable_pairs(schema))
    return tuple(out)


def build_candidates(
    instruction: GoalInstruction,
    results: APICallResultSet,
    schema: SchemaSet,
) -> StateCandidateSet:
    return StateCandidateSet(
        from_goal=candidates_from_goal(instruction, schema),
        from_api=candidates_from_api(results, schema),
    )


def option_set_for(candidates: StateCandidateSet, slot) -> OptionSet:
    """Distinct candidate values for a slot definition, sentinels appended last."""
    if not slot.informable:
        raise SchemaError(f"option sets exist only for informable slots, not {slot.name!r}")
    values: list[str] = []
    seen: set[str] = set()
    for value in candidates.values_for(slot.name):
        norm = normalize_value(value)
        if norm not in seen and not is_sentinel(value):
            seen.add(norm)
            values.append(value)
    return OptionSet(slot=slot.name, options=tuple(values) + SENTINELS)


def build_option_set(
    candidates: StateCandidateSet, slot: str, schema: SchemaSet
) -> OptionSet:
    """Same as option_set_for, resolving the slot by name against a schema."""
    if not schema.has_slot(slot):
        raise SchemaError(f"unknown slot {slot!r}")
    return option_set_for(candidates, schema.slot(slot))
