"""Ingestion of raw MultiWOZ-style corpora into the native corpus format.

Expects the stock layout: one data.json mapping dialogue id to {goal, log},
optional valListFile/testListFile split lists, and per-domain *_db.json
entity files. The log alternates user/system utterances starting with the
user, and each system entry carries the cumulative state metadata for the
exchange it closes; dialogues here are (system, user) exchanges, so the
opening system utterance is empty and the final system utterance (which
closes no exchange) is dropped.

States are read from metadata with values normalized (lowercase, collapsed
whitespace, dontcare spellings folded). The active domain per turn is the
schema-first domain whose state changed on that turn, carrying the previous
turn's domain forward when nothing changed (a heuristic; the raw data
has no turn-domain field).
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import AnnotatedDialogue, Corpus
from .dialogue import Dialogue, Turn
from .errors import CorpusError, TemplateError
from .goals import GoalInstruction, GoalTemplate, SharedConstraint, delexicalize
from .kb import KnowledgeBase, make_instance
from .labeler import TurnAnnotation
from .schema import SchemaSet, default_schema
from .text import normalize_value

log = logging.getLogger("wozgen.multiwoz")

_TAG_RE = re.compile(r"<[^>]+>")

# Raw metadata/db keys that differ from schema slot suffixes.
_KEY_MAP = {
    "leaveAt": "leave at",
    "arriveBy": "arrive by",
    "trainID": "trainid",
    "entrance_fee": "entrance fee",
}
_BOOK_KEY_MAP = {
    "people": "book people",
    "stay": "book stay",
    "day": "book day",
    "time": "book time",
}
_DROPPED_VALUES = {"", "not mentioned", "none"}

_GOAL_DOMAINS = ("attraction", "hospital", "hotel", "police", "restaurant", "taxi", "train")


def _suffix(raw_key: str) -> str:
    return _KEY_MAP.get(raw_key, raw_key)


def _clean_value(raw) -> str | None:
    value = normalize_value(str(raw))
    if value in _DROPPED_VALUES:
        return None
    return value


def _state_from_metadata(metadata: dict, schema: SchemaSet, dialogue_id: str) -> dict[str, str]:
    state: dict[str, str] = {}
    for domain, payload in metadata.items():
        if not schema.has_domain(domain):
            continue  # police/hospital and friends: tagged but untracked
        for raw_key, raw_value in payload.get("semi", {}).items():
            if isinstance(raw_value, list):
                raw_value = raw_value[0] if raw_value else ""
            value = _clean_value(raw_value)
            if value is None:
                continue
            slot = f"{domain}-{_suffix(raw_key)}"
            if not schema.has_slot(slot):
                raise CorpusError(
                    f"dialogue {dialogue_id}: unknown state key {raw_key!r}"
                    f" in domain {domain!r}"
                )
            state[slot] = value
        for raw_key, raw_value in payload.get("book", {}).items():
            if raw_key == "booked":
                continue
            if isinstance(raw_value, list):
                raw_value = raw_value[0] if raw_value else ""
            value = _clean_value(raw_value)
            if value is None:
                continue
            if raw_key not in _BOOK_KEY_MAP:
                raise CorpusError(
                    f"dialogue {dialogue_id}: unknown booking key {raw_key!r}"
                    f" in domain {domain!r}"
                )
            slot = f"{domain}-{_BOOK_KEY_MAP[raw_key]}"
            if not schema.has_slot(slot):
                raise CorpusError(
                    f"dialogue {dialogue_id}: booking slot {slot!r} not in schema"
                )
            state[slot] = value
    return state


def _active_domains(
    states: list[dict[str, str]], tagged: tuple[str, ...], schema: SchemaSet
) -> list[str]:
    out: list[str] = []
    prev: dict[str, str] = {}
    current = ""
    for state in states:
        changed = [
            dom
            for dom in schema.domain_names
            if {k: v for k, v in state.items() if k.startswith(dom + "-")}
            != {k: v for k, v in prev.items() if k.startswith(dom + "-")}
        ]
        if changed:
            current = changed[0]
        elif not current:
            schema_tagged = [d for d in schema.domain_names if d in tagged]
            current = schema_tagged[0] if schema_tagged else schema.domain_names[0]
        out.append(current)
        prev = state
    return out


def _goal_instruction(
    goal_blob: dict, tagged: tuple[str, ...], dialogue_id: str, schema: SchemaSet
) -> GoalInstruction | None:
    message = goal_blob.get("message", "")
    if isinstance(message, list):
        message = " ".join(message)
    text = _TAG_RE.sub("", message).strip()
    if not text:
        return None

    pairs: list[tuple[str, str]] = []
    seen_slots: set[str] = set()
    lowered = text.lower()
    for domain in _GOAL_DOMAINS:
        payload = goal_blob.get(domain) or {}
        if not isinstance(payload, dict):
            continue
        for section, key_map in (
            ("info", None),
            ("fail_info", None),
            ("book", _BOOK_KEY_MAP),
            ("fail_book", _BOOK_KEY_MAP),
        ):
            for raw_key, raw_value in (payload.get(section) or {}).items():
                if not isinstance(raw_value, (str, int)):
                    continue
                if key_map is not None:
                    if raw_key not in key_map:
                        continue
                    suffix = key_map[raw_key]
                else:
                    suffix = _suffix(raw_key)
                value = str(raw_value).strip()
                if not value or normalize_value(value) in _DROPPED_VALUES:
                    continue
                slot = f"{domain}-{suffix}"
                if slot in seen_slots or not schema.has_slot(slot):
                    continue
                if not schema.slot(slot).informable:
                    continue
                at = lowered.find(value.lower())
                if at < 0:
                    continue  # constraint never surfaced in the instruction text
                pairs.append((slot, text[at : at + len(value)]))
                seen_slots.add(slot)
    return GoalInstruction(
        text=text,
        explicit_pairs=tuple(pairs),
        template_id=f"mwoz-{dialogue_id}",
        domains=tagged,
    )


def ingest_dialogue(dialogue_id: str, blob: dict, schema: SchemaSet) -> AnnotatedDialogue | None:
    """Convert one raw dialogue; returns None when the log is unusable."""
    log_entries = blob.get("log", [])
    if len(log_entries) % 2 == 1:
        log.info("dialogue %s: odd log length, dropping trailing utterance", dialogue_id)
        log_entries = log_entries[:-1]
    if not log_entries:
        log.info("dialogue %s: empty log, skipped", dialogue_id)
        return None

    goal_blob = blob.get("goal", {}) or {}
    tagged = tuple(d for d in _GOAL_DOMAINS if goal_blob.get(d))

    turns: list[Turn] = []
    states: list[dict[str, str]] = []
    prev_system = ""
    for i in range(0, len(log_entries), 2):
        user_text = " ".join(str(log_entries[i].get("text", "")).split())
        system_entry = log_entries[i + 1]
        if not user_text:
            log.info("dialogue %s: empty user utterance at exchange %d, skipped dialogue",
                     dialogue_id, i // 2 + 1)
            return None
        turns.append(Turn(system=prev_system, user=user_text))
        states.append(_state_from_metadata(system_entry.get("metadata", {}), schema, dialogue_id))
        prev_system = " ".join(str(system_entry.get("text", "")).split())

    domains = _active_domains(states, tagged, schema)
    annotations = tuple(
        TurnAnnotation(state=tuple(sorted(s.items())), active_domain=d)
        for s, d in zip(states, domains)
    )
    return AnnotatedDialogue(
        id=dialogue_id,
        dialogue=Dialogue(turns=tuple(turns)),
        annotations=annotations,
        domains=tagged,
        goal=_goal_instruction(goal_blob, tagged, dialogue_id, schema),
        provenance={"source": "multiwoz", "dialogue": dialogue_id},
    )


def _read_id_list(path: Path) -> set[str]:
    raw = path.read_text(encoding="utf-8").strip()
    if raw.startswith("["):
        ids = json.loads(raw)
    else:
        ids = [line.strip() for line in raw.splitlines() if line.strip()]
    return {i.removesuffix(".json") for i in ids}


def load_databases(data_dir, domains, schema: SchemaSet) -> KnowledgeBase:
    """Build a KnowledgeBase from the per-domain *_db.json entity files.

    Only keys that map to schema slots are kept; domains without a usable
    db file (taxi has none in the stock release) are skipped.
    """
    data_dir = Path(data_dir)
    instances: dict[str, list] = {}
    for domain in domains:
        if not schema.has_domain(domain):
            continue
        db_path = data_dir / f"{domain}_db.json"
        if not db_path.exists():
            continue
        entries = json.loads(db_path.read_text(encoding="utf-8"))
        if not isinstance(entries, list):
            log.info("db file %s is not an entity list, skipped", db_path.name)
            continue
        rows = []
        for entry in entries:
            if not isinstance(entry, dict):
                continue
            pairs = {}
            for raw_key, raw_value in entry.items():
                slot = f"{domain}-{_suffix(raw_key)}"
                if not schema.has_slot(slot) or isinstance(raw_value, (dict, list)):
                    continue
                value = " ".join(str(raw_value).split())
                if value:
                    pairs[slot] = value
            if pairs:
                rows.append(pairs)
        if rows:
            instances[domain] = rows
    kb_blob = {"version": 1, "instances": instances}
    return KnowledgeBase(
        schema=schema,
        instances={
            dom: tuple(make_instance(schema, dom, row) for row in rows)
            for dom, rows in instances.items()
        },
    )


@dataclass(frozen=True)
class IngestResult:
    train: Corpus
    dev: Corpus
    test: Corpus
    kb: KnowledgeBase

    def split(self, name: str) -> Corpus:
        try:
            return {"train": self.train, "dev": self.dev, "test": self.test}[name]
        except KeyError:
            raise CorpusError(f"unknown split {name!r}") from None

    def domain_counts(self, split: str) -> dict[str, int]:
        counts: dict[str, int] = {}
        for d in self.split(split).dialogues:
            for dom in d.domains:
                counts[dom] = counts.get(dom, 0) + 1
        return dict(sorted(counts.items()))


def ingest_multiwoz(data_dir, schema: SchemaSet | None = None) -> IngestResult:
    """Ingest a raw MultiWOZ directory into train/dev/test corpora plus a KB."""
    schema = schema or default_schema()
    data_dir = Path(data_dir)
    data_path = data_dir / "data.json"
    if not data_path.exists():
        raise CorpusError(f"{data_dir}: no data.json found")
    raw = json.loads(data_path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict) or not raw:
        raise CorpusError(f"{data_path}: expected a non-empty dialogue map")

    dev_ids, test_ids = set(), set()
    for stem, target in (("valListFile", dev_ids), ("testListFile", test_ids)):
        for ext in (".json", ".txt"):
            path = data_dir / f"{stem}{ext}"
            if path.exists():
                target |= _read_id_list(path)
                break

    splits: dict[str, list[AnnotatedDialogue]] = {"train": [], "dev": [], "test": []}
    referenced_domains: set[str] = set()
    for dialogue_id in sorted(raw):
        ingested = ingest_dialogue(dialogue_id, raw[dialogue_id], schema)
        if ingested is None:
            continue
        referenced_domains |= set(ingested.domains)
        key = dialogue_id.removesuffix(".json")
        if key in test_ids:
            splits["test"].append(ingested)
        elif key in dev_ids:
            splits["dev"].append(ingested)
        else:
            splits["train"].append(ingested)

    kb = load_databases(data_dir, sorted(referenced_domains), schema)
    return IngestResult(
        train=Corpus(dialogues=tuple(splits["train"])),
        dev=Corpus(dialogues=tuple(splits["dev"])),
        test=Corpus(dialogues=tuple(splits["test"])),
        kb=kb,
    )


def _detect_shared_constraints(
    pairs: tuple[tuple[str, str], ...]
) -> tuple[SharedConstraint, ...]:
    """Heuristic cross-domain equalities: same suffix or taxi endpoint = venue name."""
    found: list[SharedConstraint] = []
    seen: set[tuple[str, str]] = set()

    def _add(slot_a: str, slot_b: str) -> None:
        key = tuple(sorted((slot_a, slot_b)))
        if key in seen:
            return
        seen.add(key)
        found.append(
            SharedConstraint(
                domain_a=slot_a.split("-", 1)[0],
                slot_a=slot_a,
                domain_b=slot_b.split("-", 1)[0],
                slot_b=slot_b,
            )
        )

    for i, (slot_a, value_a) in enumerate(pairs):
        for slot_b, value_b in pairs[i + 1 :]:
            dom_a, suf_a = slot_a.split("-", 1)
            dom_b, suf_b = slot_b.split("-", 1)
            if dom_a == dom_b or normalize_value(value_a) != normalize_value(value_b):
                continue
            if suf_a == suf_b and suf_a not in ("book day", "book people"):
                _add(slot_a, slot_b)
            taxi_ends = ("destination", "departure")
            if dom_a == "taxi" and suf_a in taxi_ends and suf_b == "name":
                _add(slot_a, slot_b)
            if dom_b == "taxi" and suf_b in taxi_ends and suf_a == "name":
                _add(slot_b, slot_a)
    return tuple(found)


def extract_templates(corpus: Corpus, schema: SchemaSet) -> tuple[GoalTemplate, ...]:
    """Delexicalize every goal-bearing dialogue into a reusable template."""
    import dataclasses

    templates: list[GoalTemplate] = []
    for d in corpus.dialogues:
        if d.goal is None or not d.goal.explicit_pairs:
            continue
        goal_domains = tuple(dom for dom in d.goal.domains if schema.has_domain(dom))
        if not goal_domains:
            continue
        pairs = tuple(
            (slot, value) for slot, value in d.goal.explicit_pairs
            if slot.split("-", 1)[0] in goal_domains
        )
        if not pairs:
            continue
        goal = GoalInstruction(
            text=d.goal.text,
            explicit_pairs=pairs,
            template_id=f"tpl-{d.id}",
            domains=goal_domains,
        )
        try:
            template = delexicalize(goal)
        except TemplateError as exc:  # overlapping spans; skip rather than corrupt
            log.info("dialogue %s: template extraction failed (%s)", d.id, exc)
            continue
        constraints = _detect_shared_constraints(pairs)
        if constraints:
            template = dataclasses.replace(template, shared_constraints=constraints)
        templates.append(template)
    return tuple(templates)
