"""File-backed knowledge base: instances, deterministic constrained queries.

KB file format (JSON):

    {"version": 1,
     "instances": {"restaurant": [{"restaurant-food": "british", ...}, ...], ...}}

Instances are immutable after load; adding instances means loading a new KB.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import SchemaError
from .schema import SchemaSet
from .text import normalize_value


@dataclass(frozen=True)
class KBInstance:
    """One knowledge-base record: a domain plus slot-value pairs in schema order."""

    domain: str
    pairs: tuple[tuple[str, str], ...]

    def get(self, slot: str) -> str | None:
        for s, v in self.pairs:
            if s == slot:
                return v
        return None

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)

    def informable_pairs(self, schema: SchemaSet) -> tuple[tuple[str, str], ...]:
        return tuple((s, v) for s, v in self.pairs if schema.slot(s).informable)


class KnowledgeBase:
    """Per-domain instance lists with constraint queries.

    Query matching is case-insensitive exact string match after whitespace
    normalization. Result order is stable instance load order.
    """

    def __init__(self, schema: SchemaSet, instances: dict[str, list[KBInstance]]):
        self.schema = schema
        self._instances: dict[str, tuple[KBInstance, ...]] = {}
        for domain, items in instances.items():
            if not schema.has_domain(domain):
                raise SchemaError(f"KB references unknown domain {domain!r}")
            dom_schema = schema.domain(domain)
            validated = []
            for inst in items:
                for slot, _ in inst.pairs:
                    if not dom_schema.has_slot(slot):
                        raise SchemaError(
                            f"KB instance in {domain!r} uses unknown slot {slot!r}"
                        )
                validated.append(inst)
            self._instances[domain] = tuple(validated)

    @property
    def domains(self) -> tuple[str, ...]:
        return tuple(self._instances)

    def instances(self, domain: str) -> tuple[KBInstance, ...]:
        if domain not in self._instances:
            raise SchemaError(f"unknown domain {domain!r}")
        return self._instances[domain]

    def size(self, domain: str) -> int:
        return len(self.instances(domain))

    def query(self, domain: str, constraints) -> list[KBInstance]:
        """Instances of ``domain`` whose pairs include every constraint pair.

        Constraints must name informable slots of the domain; an empty
        constraint set returns every instance.
        """
        dom_instances = self.instances(domain)
        dom_schema = self.schema.domain(domain)
        wanted = []
        for slot, value in constraints:
            sdef = dom_schema.slot(slot)
            if not sdef.informable:
                raise SchemaError(f"cannot constrain requestable slot {slot!r}")
            wanted.append((slot, normalize_value(value)))

        out = []
        for inst in dom_instances:
            values = {s: normalize_value(v) for s, v in inst.pairs}
            if all(values.get(s) == v for s, v in wanted):
                out.append(inst)
        return out


def make_instance(schema: SchemaSet, domain: str, pairs: dict[str, str]) -> KBInstance:
    """Build an instance with its pairs reordered to schema slot order."""
    dom_schema = schema.domain(domain)
    ordered = []
    for slot_def in dom_schema.slots:
        if slot_def.name in pairs:
            ordered.append((slot_def.name, str(pairs[slot_def.name])))
    extra = set(pairs) - {s for s, _ in ordered}
    if extra:
        raise SchemaError(f"KB instance in {domain!r} uses unknown slot {sorted(extra)[0]!r}")
    return KBInstance(domain=domain, pairs=tuple(ordered))


def load_kb(source: str | Path | dict, schema: SchemaSet) -> KnowledgeBase:
    """Load a native-format KB file (or parsed dict) against a schema."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: not valid JSON at line {e.lineno}: {e.msg}") from e
    else:
        doc = source

    if not isinstance(doc, dict) or "instances" not in doc:
        raise SchemaError("KB document must be an object with an 'instances' key")

    instances: dict[str, list[KBInstance]] = {}
    for domain, records in doc["instances"].items():
        instances[domain] = [make_instance(schema, domain, rec) for rec in records]
    return KnowledgeBase(schema, instances)


def save_kb(path: str | Path, kb: KnowledgeBase) -> None:
    doc = {
        "version": 1,
        "instances": {
            d: [inst.as_dict() for inst in kb.instances(d)] for d in kb.domains
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def demo_kb(schema: SchemaSet) -> KnowledgeBase:
    """The bundled demonstration KB matching the default schema."""
    doc = json.loads(resources.files("wozgen.data").joinpath("demo_kb.json").read_text())
    return load_kb(doc, schema)
