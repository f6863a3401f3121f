"""Domain schemas: slot definitions, per-domain slot inventories, loading/validation.

Schema file format (JSON):

    {"version": 1,
     "domain_options": ["Attraction", "Hotel", ...],
     "domains": {"hotel": {"hotel-area": {"kind": "informable",
                                          "description": "what is area or place of hotel?",
                                          "value_vocab": null}, ...}, ...}}

``domain_options`` is the ordered option list for the active-domain question;
domains absent from it are ingested but not offered as domain answers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import SchemaError
from .text import normalize_value

INFORMABLE = "informable"
REQUESTABLE = "requestable"
_KINDS = (INFORMABLE, REQUESTABLE)


@dataclass(frozen=True)
class SlotDef:
    """One slot of a domain schema.

    ``description`` doubles as the natural-language question asked when
    labeling this slot, so it must be non-empty for informable slots.
    """

    domain: str
    name: str
    kind: str
    description: str = ""
    value_vocab: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise SchemaError(f"slot {self.name!r}: invalid kind {self.kind!r}")
        if not self.name.startswith(self.domain + "-"):
            raise SchemaError(
                f"slot {self.name!r} does not carry the {self.domain!r} domain prefix"
            )
        if self.kind == INFORMABLE and not self.description.strip():
            raise SchemaError(f"informable slot {self.name!r} has an empty description")

    @property
    def informable(self) -> bool:
        return self.kind == INFORMABLE

    @property
    def suffix(self) -> str:
        """Slot name without the domain prefix, e.g. "book people"."""
        return self.name.split("-", 1)[1]


@dataclass(frozen=True)
class DomainSchema:
    domain: str
    slots: tuple[SlotDef, ...]
    in_domain_options: bool = True

    def __post_init__(self):
        for slot in self.slots:
            if slot.domain != self.domain:
                raise SchemaError(
                    f"slot {slot.name!r} does not belong to domain {self.domain!r}"
                )

    @property
    def informable_slots(self) -> tuple[SlotDef, ...]:
        return tuple(s for s in self.slots if s.informable)

    def slot(self, name: str) -> SlotDef:
        for s in self.slots:
            if s.name == name:
                return s
        raise SchemaError(f"unknown slot {name!r} in domain {self.domain!r}")

    def has_slot(self, name: str) -> bool:
        return any(s.name == name for s in self.slots)


@dataclass(frozen=True)
class SchemaSet:
    """All domain schemas of one deployment plus the domain-question options.

    Slot names are globally unique across the set. Immutable after construction.
    """

    domains: tuple[DomainSchema, ...]
    domain_options: tuple[str, ...] = ()
    _by_slot: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        seen: dict[str, str] = {}
        for dom in self.domains:
            for slot in dom.slots:
                if slot.name in seen:
                    raise SchemaError(f"duplicate slot name {slot.name!r}")
                seen[slot.name] = dom.domain
                self._by_slot[slot.name] = slot

    @property
    def domain_names(self) -> tuple[str, ...]:
        return tuple(d.domain for d in self.domains)

    def domain(self, name: str) -> DomainSchema:
        for d in self.domains:
            if d.domain == name:
                return d
        raise SchemaError(f"unknown domain {name!r}")

    def has_domain(self, name: str) -> bool:
        return any(d.domain == name for d in self.domains)

    def slot(self, name: str) -> SlotDef:
        try:
            return self._by_slot[name]
        except KeyError:
            raise SchemaError(f"unknown slot {name!r}") from None

    def has_slot(self, name: str) -> bool:
        return name in self._by_slot

    def informable_slots(self) -> tuple[SlotDef, ...]:
        """All informable slots, domain declaration order then slot order."""
        out = []
        for dom in self.domains:
            out.extend(dom.informable_slots)
        return tuple(out)

    def option_for_domain(self, domain: str) -> str | None:
        """Domain-question option spelling for a domain name, if listed."""
        want = normalize_value(domain)
        for opt in self.domain_options:
            if normalize_value(opt) == want:
                return opt
        return None


def load_schema(source: str | Path | dict) -> SchemaSet:
    """Load a schema set from a schema file path or an already-parsed dict."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: not valid JSON at line {e.lineno}: {e.msg}") from e
        where = str(path)
    else:
        doc, where = source, "<dict>"

    if not isinstance(doc, dict) or "domains" not in doc:
        raise SchemaError(f"{where}: schema document must be an object with a 'domains' key")

    options = tuple(doc.get("domain_options", ()))
    option_domains = {normalize_value(o) for o in options}

    domains = []
    for dom_name, slots_doc in doc["domains"].items():
        if not isinstance(slots_doc, dict):
            raise SchemaError(f"{where}: domain {dom_name!r} must map slot names to definitions")
        slots = []
        for slot_name, sdoc in slots_doc.items():
            vocab = sdoc.get("value_vocab")
            slots.append(
                SlotDef(
                    domain=dom_name,
                    name=slot_name,
                    kind=sdoc.get("kind", ""),
                    description=sdoc.get("description", ""),
                    value_vocab=tuple(vocab) if vocab else None,
                )
            )
        domains.append(
            DomainSchema(
                domain=dom_name,
                slots=tuple(slots),
                in_domain_options=normalize_value(dom_name) in option_domains,
            )
        )
    return SchemaSet(domains=tuple(domains), domain_options=options)


def save_schema(path, schema: SchemaSet) -> None:
    """Write a schema set back to the documented file format."""
    doc = {
        "version": 1,
        "domain_options": list(schema.domain_options),
        "domains": {
            dom.domain: {
                slot.name: {
                    "kind": slot.kind,
                    "description": slot.description,
                    **({"value_vocab": list(slot.value_vocab)} if slot.value_vocab else {}),
                }
                for slot in dom.slots
            }
            for dom in schema.domains
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def default_schema() -> SchemaSet:
    """The bundled five-domain travel schema (30 informable slots)."""
    return load_schema(json.loads(_bundled("multiwoz_schema.json")))


def _bundled(name: str) -> str:
    return resources.files("wozgen.data").joinpath(name).read_text()
