"""Corpus-level training-file emission with recountable manifests.

Both emitters write JSON-lines records plus a sidecar manifest
(`<file>.manifest.json`) holding the counts a consumer needs to verify the
file without trusting it: dialogues, turns, records, and for the labeler the
None/non-None answer split and the weighting constant.
"""

from __future__ import annotations

import json
from pathlib import Path

from .candidates import NONE_OPTION
from .collector import COLLECTOR_LABEL_SMOOTHING, emit_collector_training_example
from .corpus import Corpus
from .errors import CorpusError
from .goals import (
    APICallResultSet,
    BOOKING_SUFFIXES,
    GoalInstruction,
    MAX_API_RESULTS,
)
from .kb import KnowledgeBase
from .labeler import LabelerTrainingConfig, build_labeler_training_records
from .schema import SchemaSet
from .text import normalize_value, token_count


def write_manifest(target_path, manifest: dict) -> Path:
    path = Path(f"{target_path}.manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def reconstruct_api_results(
    goal: GoalInstruction, kb: KnowledgeBase, schema: SchemaSet
) -> APICallResultSet:
    """Best-effort API results for a gold dialogue that never recorded any.

    For each goal domain, the first KB instance matching the goal's concrete
    non-booking constraints stands in for the result the system would have
    seen. Domains without a KB or without matches contribute nothing.
    """
    results = []
    for domain in goal.domains:
        if len(results) == MAX_API_RESULTS:
            break
        if domain not in kb.domains:
            continue
        constraints = {}
        for slot, value in goal.explicit_pairs:
            dom, _, suffix = slot.partition("-")
            if dom != domain or suffix in BOOKING_SUFFIXES:
                continue
            if not schema.has_slot(slot) or not schema.slot(slot).informable:
                continue
            if normalize_value(value) == "dontcare":
                continue
            constraints[slot] = value
        matches = kb.query(domain, constraints.items())
        if matches:
            results.append(matches[0])
    return APICallResultSet(results=tuple(results))


def emit_collector_training_file(
    corpus: Corpus,
    path,
    schema: SchemaSet,
    kb: KnowledgeBase | None = None,
) -> dict:
    """Write (source, target) generation examples; returns the manifest."""
    records = []
    target_tokens = 0
    for d in corpus.dialogues:
        if d.goal is None:
            raise CorpusError(
                f"dialogue {d.id!r} has no goal instruction; cannot emit a"
                " generation training example"
            )
        api = d.api
        if api is None:
            api = (
                reconstruct_api_results(d.goal, kb, schema)
                if kb is not None
                else APICallResultSet(results=())
            )
        example = emit_collector_training_example(d.dialogue, d.goal, api, schema)
        target_tokens += token_count(example.target)
        records.append(example.as_record())

    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    manifest = {
        "kind": "collector-training",
        "dialogues": len(corpus),
        "records": len(records),
        "target_tokens": target_tokens,
        "label_smoothing": COLLECTOR_LABEL_SMOOTHING,
    }
    write_manifest(path, manifest)
    return manifest


def emit_labeler_training_file(
    corpus: Corpus,
    path,
    schema: SchemaSet,
    config: LabelerTrainingConfig = LabelerTrainingConfig(),
    max_context_tokens: int | None = None,
) -> dict:
    """Write weighted multiple-choice records; returns the manifest."""
    records = []
    turns = 0
    for d in corpus.dialogues:
        turns += len(d.dialogue)
        records.extend(
            build_labeler_training_records(
                d.dialogue,
                d.states,
                d.active_domains,
                schema,
                config,
                dialogue_id=d.id,
                max_context_tokens=max_context_tokens,
                candidates=d.candidates,
            )
        )
    none_answers = sum(
        1
        for r in records
        if r["meta"]["slot"] is not None
        and r["options"][r["answer_index"]] == NONE_OPTION
    )
    non_none_answers = sum(1 for r in records if r["meta"]["slot"] is not None) - none_answers

    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    manifest = {
        "kind": "labeler-training",
        "dialogues": len(corpus),
        "turns": turns,
        "records": len(records),
        "questions_per_turn": len(schema.informable_slots()) + 1,
        "beta": config.beta,
        "none_answers": none_answers,
        "non_none_answers": non_none_answers,
    }
    write_manifest(path, manifest)
    return manifest
