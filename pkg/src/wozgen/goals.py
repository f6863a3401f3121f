"""Goal templates, API-result sampling, and aligned goal instructions.

Template file format (JSON):

    [
      {
        "id": "rest-hotel-01",
        "text": "you are looking for a [restaurant-food] restaurant ...",
        "domains": ["restaurant", "hotel"],
        "placeholders": ["restaurant-food", "hotel-area"],
        "shared_constraints": [["restaurant", "area", "hotel", "area"]],
        "booking_slots": []
      },
      ...
    ]

Placeholders are slot names in square brackets. Constraint entries are
(domain_a, slot_a, domain_b, slot_b); slots may be written as full names
("hotel-area") or bare suffixes ("area").
"""

from __future__ import annotations

import itertools
import json
import random
import re
from dataclasses import dataclass, field

from .errors import TemplateError, UnsatisfiableConstraintsError
from .kb import KBInstance, KnowledgeBase
from .schema import SchemaSet
from .text import normalize_value

MAX_API_RESULTS = 3
DEFAULT_REJECTION_ATTEMPTS = 1000
EXHAUSTIVE_CAP = 200_000

# Slot suffixes whose values come from a pool rather than the KB.
BOOKING_SUFFIXES = frozenset(
    {"book people", "book day", "book time", "book stay", "leave at", "arrive by"}
)

_PLACEHOLDER_RE = re.compile(r"\[([^\[\]]+)\]")

_TIMES = tuple(f"{h:02d}:{m:02d}" for h in range(24) for m in range(0, 60, 5))
DEFAULT_POOLS: dict[str, tuple[str, ...]] = {
    "book people": tuple(str(n) for n in range(1, 9)),
    "book stay": tuple(str(n) for n in range(1, 9)),
    "book day": (
        "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
    ),
    "book time": _TIMES,
    "leave at": _TIMES,
    "arrive by": _TIMES,
}


@dataclass(frozen=True)
class BookingPools:
    """Value pools for slots the knowledge base does not cover.

    Keys may be full slot names or bare suffixes; full names win on lookup.
    """

    pools: tuple[tuple[str, tuple[str, ...]], ...] = tuple(
        (k, v) for k, v in DEFAULT_POOLS.items()
    )

    def values_for(self, slot: str) -> tuple[str, ...]:
        by_key = dict(self.pools)
        if slot in by_key:
            return by_key[slot]
        suffix = slot.split("-", 1)[1] if "-" in slot else slot
        if suffix in by_key:
            return by_key[suffix]
        raise TemplateError(f"no booking pool configured for slot {slot!r}")

    def draw(self, slot: str, rng: random.Random) -> str:
        return rng.choice(self.values_for(slot))

    @staticmethod
    def load(path) -> "BookingPools":
        """Load pool overrides from a JSON object {key: [values...]}."""
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise TemplateError(f"{path}: booking pools must be a JSON object")
        merged = dict(DEFAULT_POOLS)
        for key, values in raw.items():
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise TemplateError(f"{path}: pool {key!r} must be a list of strings")
            if not values:
                raise TemplateError(f"{path}: pool {key!r} is empty")
            merged[key] = tuple(values)
        return BookingPools(pools=tuple(merged.items()))


@dataclass(frozen=True)
class SharedConstraint:
    """Equality between two slots across the domains of one scenario."""

    domain_a: str
    slot_a: str
    domain_b: str
    slot_b: str

    def __post_init__(self):
        for dom, slot in ((self.domain_a, self.slot_a), (self.domain_b, self.slot_b)):
            if not slot.startswith(dom + "-"):
                raise TemplateError(
                    f"constraint slot {slot!r} does not belong to domain {dom!r}"
                )


def _full_slot(domain: str, slot: str) -> str:
    return slot if slot.startswith(domain + "-") else f"{domain}-{slot}"


@dataclass(frozen=True)
class GoalTemplate:
    """A delexicalized goal: text with slot placeholders plus scenario structure."""

    id: str
    text: str
    domains: tuple[str, ...]
    placeholder_slots: tuple[str, ...]
    shared_constraints: tuple[SharedConstraint, ...] = ()
    booking_slots: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.domains:
            raise TemplateError(f"template {self.id!r} has no domains")
        found = [m.group(1) for m in _PLACEHOLDER_RE.finditer(self.text)]
        if set(found) != set(self.placeholder_slots):
            missing = sorted(set(self.placeholder_slots) - set(found))
            extra = sorted(set(found) - set(self.placeholder_slots))
            raise TemplateError(
                f"template {self.id!r}: placeholder mismatch"
                f" (missing in text: {missing}, undeclared in text: {extra})"
            )
        for slot in self.placeholder_slots:
            dom = slot.split("-", 1)[0]
            if dom not in self.domains:
                raise TemplateError(
                    f"template {self.id!r}: placeholder {slot!r} is outside"
                    f" domains {list(self.domains)}"
                )
        for con in self.shared_constraints:
            for dom in (con.domain_a, con.domain_b):
                if dom not in self.domains:
                    raise TemplateError(
                        f"template {self.id!r}: constraint references domain {dom!r}"
                        f" outside {list(self.domains)}"
                    )

    @property
    def active_domains(self) -> tuple[str, ...]:
        """Domains that receive an API result (at most three, in order)."""
        return self.domains[:MAX_API_RESULTS]


@dataclass(frozen=True)
class GoalInstruction:
    """A realized goal text plus the slot-value pairs it states explicitly."""

    text: str
    explicit_pairs: tuple[tuple[str, str], ...]
    template_id: str = ""
    domains: tuple[str, ...] = ()

    def __post_init__(self):
        for slot, value in self.explicit_pairs:
            if value not in self.text:
                raise TemplateError(
                    f"explicit value {value!r} for {slot!r} does not occur in the goal text"
                )

    def pairs_dict(self) -> dict[str, str]:
        return dict(self.explicit_pairs)


@dataclass(frozen=True)
class APICallResultSet:
    """KB instances returned to the system side, one per served domain."""

    results: tuple[KBInstance, ...]

    def __post_init__(self):
        if len(self.results) > MAX_API_RESULTS:
            raise TemplateError(
                f"at most {MAX_API_RESULTS} API results allowed, got {len(self.results)}"
            )

    @property
    def domains(self) -> tuple[str, ...]:
        # Provenance: each result serves the domain it was drawn from.
        return tuple(r.domain for r in self.results)

    def for_domain(self, domain: str) -> KBInstance | None:
        for inst in self.results:
            if inst.domain == domain:
                return inst
        return None

    def __len__(self) -> int:
        return len(self.results)


def _boundary_pattern(values: list[str]) -> re.Pattern:
    ordered = sorted(set(values), key=lambda v: (-len(v), v))
    alternation = "|".join(re.escape(v) for v in ordered)
    return re.compile(rf"(?<![A-Za-z0-9])(?:{alternation})(?![A-Za-z0-9])")


def delexicalize(instruction: GoalInstruction) -> GoalTemplate:
    """Replace every occurrence of each explicit value with its slot placeholder.

    Overlapping values resolve longest-match-first in a single left-to-right
    pass. When two slots share one value the earlier pair claims it.
    """
    if not instruction.explicit_pairs:
        return GoalTemplate(
            id=instruction.template_id or "delex",
            text=instruction.text,
            domains=instruction.domains or ("unknown",),
            placeholder_slots=(),
        )

    slot_by_value: dict[str, str] = {}
    for slot, value in instruction.explicit_pairs:
        slot_by_value.setdefault(value, slot)

    pattern = _boundary_pattern(list(slot_by_value))
    matched: set[str] = set()

    def _sub(m: re.Match) -> str:
        matched.add(m.group(0))
        return f"[{slot_by_value[m.group(0)]}]"

    text = pattern.sub(_sub, instruction.text)
    for slot, value in instruction.explicit_pairs:
        if value not in matched and slot_by_value[value] == slot:
            raise TemplateError(
                f"value {value!r} for slot {slot!r} not found as a standalone"
                " span in the goal text"
            )

    claimed = []
    seen = set()
    for slot, value in instruction.explicit_pairs:
        if slot_by_value[value] == slot and slot not in seen:
            claimed.append(slot)
            seen.add(slot)
    domains = instruction.domains
    if not domains:
        ordered: list[str] = []
        for slot in claimed:
            dom = slot.split("-", 1)[0]
            if dom not in ordered:
                ordered.append(dom)
        domains = tuple(ordered) or ("unknown",)
    return GoalTemplate(
        id=instruction.template_id or "delex",
        text=text,
        domains=domains,
        placeholder_slots=tuple(claimed),
    )


def _satisfies(assignment: dict[str, KBInstance], con: SharedConstraint) -> bool:
    inst_a = assignment.get(con.domain_a)
    inst_b = assignment.get(con.domain_b)
    if inst_a is None or inst_b is None:
        # Constraint touches a domain beyond the result cap; nothing to check.
        return True
    val_a = inst_a.get(con.slot_a)
    val_b = inst_b.get(con.slot_b)
    if val_a is None or val_b is None:
        return False
    return normalize_value(val_a) == normalize_value(val_b)


def sample_api_results(
    template: GoalTemplate,
    kb: KnowledgeBase,
    rng: random.Random,
    max_attempts: int = DEFAULT_REJECTION_ATTEMPTS,
) -> APICallResultSet:
    """Sample one KB instance per active template domain under shared constraints.

    Uniform over satisfying joint assignments: bounded rejection sampling
    first, exhaustive enumeration as a fallback when the joint space is small
    enough to scan.
    """
    domains = template.active_domains
    per_domain: list[tuple[KBInstance, ...]] = []
    for dom in domains:
        instances = kb.instances(dom)
        if not instances:
            raise UnsatisfiableConstraintsError(
                f"template {template.id!r}: domain {dom!r} has no KB instances"
            )
        per_domain.append(instances)

    def _check(picks: tuple[KBInstance, ...]) -> bool:
        assignment = dict(zip(domains, picks))
        return all(_satisfies(assignment, c) for c in template.shared_constraints)

    for _ in range(max_attempts):
        picks = tuple(insts[rng.randrange(len(insts))] for insts in per_domain)
        if _check(picks):
            return APICallResultSet(results=picks)

    space = 1
    for insts in per_domain:
        space *= len(insts)
    if space <= EXHAUSTIVE_CAP:
        satisfying = [p for p in itertools.product(*per_domain) if _check(p)]
        if satisfying:
            return APICallResultSet(results=satisfying[rng.randrange(len(satisfying))])
        raise UnsatisfiableConstraintsError(
            f"template {template.id!r}: no joint assignment satisfies"
            f" {len(template.shared_constraints)} shared constraints"
        )
    raise UnsatisfiableConstraintsError(
        f"template {template.id!r}: rejection sampling failed after"
        f" {max_attempts} attempts and the joint space ({space}) is too large to scan"
    )


def instantiate(
    template: GoalTemplate,
    results: APICallResultSet,
    rng: random.Random,
    pools: BookingPools | None = None,
) -> GoalInstruction:
    """Fill template placeholders from sampled instances and booking pools.

    KB values win when a placeholder's slot appears in the instance serving
    its domain; booking-class slots fall back to pool draws. All occurrences
    of one placeholder receive the same value.
    """
    pools = pools or BookingPools()
    for con in template.shared_constraints:
        assignment = {r.domain: r for r in results.results}
        if not _satisfies(assignment, con):
            raise TemplateError(
                f"template {template.id!r}: API results violate shared constraint"
                f" {con.slot_a} = {con.slot_b}"
            )

    booking = set(template.booking_slots)
    assigned: list[tuple[str, str]] = []
    for slot in template.placeholder_slots:
        dom = slot.split("-", 1)[0]
        inst = results.for_domain(dom)
        value = inst.get(slot) if inst is not None else None
        if value is None:
            suffix = slot.split("-", 1)[1] if "-" in slot else slot
            if slot in booking or suffix in BOOKING_SUFFIXES:
                value = pools.draw(slot, rng)
            else:
                raise TemplateError(
                    f"template {template.id!r}: placeholder {slot!r} has no source"
                    " (absent from API results and not a booking slot)"
                )
        assigned.append((slot, value))

    text = template.text
    for slot, value in assigned:
        text = text.replace(f"[{slot}]", value)
    return GoalInstruction(
        text=text,
        explicit_pairs=tuple(assigned),
        template_id=template.id,
        domains=template.domains,
    )


def _parse_constraint(entry, template_id: str) -> SharedConstraint:
    if not isinstance(entry, (list, tuple)) or len(entry) != 4:
        raise TemplateError(
            f"template {template_id!r}: constraint must be"
            f" [domain_a, slot_a, domain_b, slot_b], got {entry!r}"
        )
    dom_a, slot_a, dom_b, slot_b = entry
    return SharedConstraint(
        domain_a=dom_a,
        slot_a=_full_slot(dom_a, slot_a),
        domain_b=dom_b,
        slot_b=_full_slot(dom_b, slot_b),
    )


def load_templates(source, schema: SchemaSet | None = None) -> tuple[GoalTemplate, ...]:
    """Load goal templates from a JSON file path or a pre-parsed list.

    With a schema, placeholder and constraint slots must exist and placeholder
    slots must be informable.
    """
    if isinstance(source, (str,)) or hasattr(source, "__fspath__"):
        with open(source, encoding="utf-8") as fh:
            raw = json.load(fh)
        origin = str(source)
    else:
        raw, origin = source, "<memory>"
    if not isinstance(raw, list):
        raise TemplateError(f"{origin}: template file must hold a JSON list")

    templates: list[GoalTemplate] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise TemplateError(f"{origin}: entry {i} is not an object")
        try:
            tpl = GoalTemplate(
                id=entry["id"],
                text=entry["text"],
                domains=tuple(entry["domains"]),
                placeholder_slots=tuple(entry.get("placeholders", ())),
                shared_constraints=tuple(
                    _parse_constraint(c, entry.get("id", f"#{i}"))
                    for c in entry.get("shared_constraints", ())
                ),
                booking_slots=tuple(entry.get("booking_slots", ())),
            )
        except KeyError as exc:
            raise TemplateError(f"{origin}: entry {i} is missing field {exc}") from None
        if tpl.id in seen_ids:
            raise TemplateError(f"{origin}: duplicate template id {tpl.id!r}")
        seen_ids.add(tpl.id)
        if schema is not None:
            _check_against_schema(tpl, schema, origin)
        templates.append(tpl)
    return tuple(templates)


def _check_against_schema(tpl: GoalTemplate, schema: SchemaSet, origin: str) -> None:
    for dom in tpl.domains:
        if not schema.has_domain(dom):
            raise TemplateError(f"{origin}: template {tpl.id!r} uses unknown domain {dom!r}")
    for slot in tpl.placeholder_slots:
        if not schema.has_slot(slot):
            raise TemplateError(f"{origin}: template {tpl.id!r} uses unknown slot {slot!r}")
        if not schema.slot(slot).informable:
            raise TemplateError(
                f"{origin}: template {tpl.id!r} places requestable slot {slot!r}"
            )
    for con in tpl.shared_constraints:
        for slot in (con.slot_a, con.slot_b):
            if not schema.has_slot(slot):
                raise TemplateError(
                    f"{origin}: template {tpl.id!r} constrains unknown slot {slot!r}"
                )


def demo_templates(schema: SchemaSet | None = None) -> tuple[GoalTemplate, ...]:
    """The bundled demonstration templates (pairs with the demo KB)."""
    from importlib.resources import files

    data = files("wozgen.data").joinpath("demo_templates.json").read_text("utf-8")
    return load_templates(json.loads(data), schema)
