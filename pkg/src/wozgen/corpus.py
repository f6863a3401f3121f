"""Corpus containers and the versioned on-disk formats.

Native corpus format (JSON, sorted keys, stable across runs):

    {
      "format": "wozgen-corpus",
      "version": 1,
      "dialogues": [
        {
          "id": "...", "domains": [...],
          "turns": [{"system": "...", "user": "..."}, ...],
          "states": [{"slot": "value", ...}, ...],
          "active_domains": ["...", ...],
          "goal": {...} | null, "api": {...} | null,
          "candidates": {...} | null, "provenance": {...} | null
        }, ...
      ]
    }

The turn-level export (one JSON object per line) feeds downstream state
trackers: {dialogue_id, turn_idx, system, user, belief_state, active_domain}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .candidates import StateCandidateSet
from .dialogue import Dialogue, Turn
from .errors import CorpusError
from .goals import APICallResultSet, GoalInstruction
from .kb import KBInstance
from .labeler import TurnAnnotation

CORPUS_FORMAT = "wozgen-corpus"
CORPUS_VERSION = 1


@dataclass(frozen=True)
class AnnotatedDialogue:
    """A dialogue plus per-turn states, domain tags, and its origin."""

    id: str
    dialogue: Dialogue
    annotations: tuple[TurnAnnotation, ...]
    domains: tuple[str, ...]
    goal: GoalInstruction | None = None
    api: APICallResultSet | None = None
    candidates: StateCandidateSet | None = None
    provenance: dict | None = field(default=None, compare=True)

    def __post_init__(self):
        if len(self.annotations) != len(self.dialogue):
            raise CorpusError(
                f"dialogue {self.id!r}: {len(self.dialogue)} turns but"
                f" {len(self.annotations)} turn annotations"
            )

    @property
    def states(self) -> list[dict[str, str]]:
        return [a.state_dict() for a in self.annotations]

    @property
    def active_domains(self) -> list[str]:
        return [a.active_domain for a in self.annotations]


@dataclass(frozen=True)
class Corpus:
    dialogues: tuple[AnnotatedDialogue, ...]

    def __len__(self) -> int:
        return len(self.dialogues)

    def __iter__(self):
        return iter(self.dialogues)

    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.dialogues)


def _goal_to_json(goal: GoalInstruction | None):
    if goal is None:
        return None
    return {
        "text": goal.text,
        "explicit_pairs": [list(p) for p in goal.explicit_pairs],
        "template_id": goal.template_id,
        "domains": list(goal.domains),
    }


def _goal_from_json(blob) -> GoalInstruction | None:
    if blob is None:
        return None
    return GoalInstruction(
        text=blob["text"],
        explicit_pairs=tuple((s, v) for s, v in blob["explicit_pairs"]),
        template_id=blob.get("template_id", ""),
        domains=tuple(blob.get("domains", ())),
    )


def _api_to_json(api: APICallResultSet | None):
    if api is None:
        return None
    return {
        "results": [
            {"domain": inst.domain, "pairs": [list(p) for p in inst.pairs]}
            for inst in api.results
        ]
    }


def _api_from_json(blob) -> APICallResultSet | None:
    if blob is None:
        return None
    return APICallResultSet(
        results=tuple(
            KBInstance(domain=r["domain"], pairs=tuple((s, v) for s, v in r["pairs"]))
            for r in blob["results"]
        )
    )


def _candidates_to_json(cand: StateCandidateSet | None):
    if cand is None:
        return None
    return {
        "from_goal": [list(p) for p in cand.from_goal],
        "from_api": [list(p) for p in cand.from_api],
    }


def _candidates_from_json(blob) -> StateCandidateSet | None:
    if blob is None:
        return None
    return StateCandidateSet(
        from_goal=tuple((s, v) for s, v in blob["from_goal"]),
        from_api=tuple((s, v) for s, v in blob["from_api"]),
    )


def dialogue_to_json(d: AnnotatedDialogue) -> dict:
    return {
        "id": d.id,
        "domains": list(d.domains),
        "turns": [{"system": t.system, "user": t.user} for t in d.dialogue.turns],
        "states": d.states,
        "active_domains": d.active_domains,
        "goal": _goal_to_json(d.goal),
        "api": _api_to_json(d.api),
        "candidates": _candidates_to_json(d.candidates),
        "provenance": d.provenance,
    }


def dialogue_from_json(blob: dict) -> AnnotatedDialogue:
    try:
        turns = tuple(Turn(system=t["system"], user=t["user"]) for t in blob["turns"])
        annotations = tuple(
            TurnAnnotation(
                state=tuple(sorted(state.items())),
                active_domain=dom,
            )
            for state, dom in zip(blob["states"], blob["active_domains"], strict=True)
        )
        return AnnotatedDialogue(
            id=blob["id"],
            dialogue=Dialogue(turns=turns),
            annotations=annotations,
            domains=tuple(blob["domains"]),
            goal=_goal_from_json(blob.get("goal")),
            api=_api_from_json(blob.get("api")),
            candidates=_candidates_from_json(blob.get("candidates")),
            provenance=blob.get("provenance"),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise CorpusError(
            f"malformed corpus entry {blob.get('id', '<no id>')!r}: {exc}"
        ) from exc


def save_corpus(path, corpus: Corpus) -> None:
    blob = {
        "format": CORPUS_FORMAT,
        "version": CORPUS_VERSION,
        "dialogues": [dialogue_to_json(d) for d in corpus.dialogues],
    }
    Path(path).write_text(
        json.dumps(blob, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_corpus(path) -> Corpus:
    try:
        blob = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(blob, dict) or blob.get("format") != CORPUS_FORMAT:
        raise CorpusError(f"{path}: not a {CORPUS_FORMAT} file")
    if blob.get("version") != CORPUS_VERSION:
        raise CorpusError(
            f"{path}: unsupported corpus version {blob.get('version')!r}"
        )
    return Corpus(dialogues=tuple(dialogue_from_json(d) for d in blob["dialogues"]))


def export_turn_records(corpus: Corpus) -> list[dict]:
    """Flatten a corpus into per-turn records for downstream DST training."""
    records = []
    for d in corpus.dialogues:
        for i, (turn, ann) in enumerate(zip(d.dialogue.turns, d.annotations), start=1):
            records.append(
                {
                    "dialogue_id": d.id,
                    "turn_idx": i,
                    "system": turn.system,
                    "user": turn.user,
                    "belief_state": ann.state_dict(),
                    "active_domain": ann.active_domain,
                }
            )
    return records


def save_turn_records(path, corpus: Corpus) -> int:
    """Write the turn-level JSONL export; returns the record count."""
    records = export_turn_records(corpus)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return len(records)
