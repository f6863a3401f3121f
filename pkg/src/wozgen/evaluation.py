"""State-tracking metrics, intrinsic labeler scoring, and corpus statistics.

Values are normalized (lowercase, trimmed, collapsed whitespace) before any
comparison, and "none" values are treated as absent, so a predicted None and
a missing slot are the same thing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .candidates import StateCandidateSet
from .corpus import Corpus
from .errors import EvalError
from .labeler import LabelerBackend, annotate_dialogue
from .schema import SchemaSet
from .text import normalize_value, token_count

TurnKey = tuple[str, int]


@dataclass(frozen=True)
class PredictionSet:
    """Predicted (or gold) states keyed by (dialogue id, turn index)."""

    states: tuple[tuple[TurnKey, tuple[tuple[str, str], ...]], ...]

    def __post_init__(self):
        by_dialogue: dict[str, list[int]] = {}
        for (did, idx), _ in self.states:
            by_dialogue.setdefault(did, []).append(idx)
        for did, indices in by_dialogue.items():
            if sorted(indices) != list(range(1, len(indices) + 1)):
                raise EvalError(
                    f"dialogue {did!r}: turn indices {sorted(indices)} are not"
                    " contiguous from 1"
                )

    def as_dict(self) -> dict[TurnKey, dict[str, str]]:
        return {key: dict(state) for key, state in self.states}

    @property
    def keys(self) -> set[TurnKey]:
        return {key for key, _ in self.states}

    def __len__(self) -> int:
        return len(self.states)


def predictions_from_corpus(corpus: Corpus) -> PredictionSet:
    """Read the per-turn annotations of a corpus as a PredictionSet."""
    states = []
    for d in corpus.dialogues:
        for i, ann in enumerate(d.annotations, start=1):
            states.append(((d.id, i), ann.state))
    return PredictionSet(states=tuple(states))


def load_predictions(path) -> PredictionSet:
    """Load JSON-lines records {dialogue_id, turn_idx, state: {slot: value}}.

    The per-turn corpus export names its state field "belief_state"; that
    spelling is accepted too, so an exported gold file evaluates directly.
    """
    states = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                key = (rec["dialogue_id"], int(rec["turn_idx"]))
                state = rec["state"] if "state" in rec else rec["belief_state"]
                states.append((key, tuple(sorted(state.items()))))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise EvalError(f"{path}:{line_no}: bad prediction record: {exc}") from exc
    return PredictionSet(states=tuple(states))


def _normalized_state(state: dict[str, str]) -> dict[str, str]:
    out = {}
    for slot, value in state.items():
        norm = normalize_value(value)
        if norm != "none":
            out[slot] = norm
    return out


def _check_keys(preds: PredictionSet, golds: PredictionSet) -> None:
    missing = sorted(golds.keys - preds.keys)
    extra = sorted(preds.keys - golds.keys)
    if missing or extra:
        raise EvalError(
            f"prediction/gold key mismatch: {len(missing)} missing"
            f" (e.g. {missing[:5]}), {len(extra)} unexpected (e.g. {extra[:5]})"
        )
    if not golds.keys:
        raise EvalError("no turns to evaluate")


def joint_goal_accuracy(preds: PredictionSet, golds: PredictionSet) -> float:
    """Fraction of turns whose full predicted state matches gold exactly."""
    _check_keys(preds, golds)
    pred_map, gold_map = preds.as_dict(), golds.as_dict()
    hits = sum(
        1
        for key in gold_map
        if _normalized_state(pred_map[key]) == _normalized_state(gold_map[key])
    )
    return hits / len(gold_map)


def slot_accuracy(
    preds: PredictionSet, golds: PredictionSet, slot_inventory: tuple[str, ...]
) -> float:
    """Fraction of (turn, slot) pairs predicted correctly, absent = none."""
    if not slot_inventory:
        raise EvalError("empty slot inventory")
    _check_keys(preds, golds)
    pred_map, gold_map = preds.as_dict(), golds.as_dict()
    hits = total = 0
    for key in gold_map:
        pred = _normalized_state(pred_map[key])
        gold = _normalized_state(gold_map[key])
        for slot in slot_inventory:
            total += 1
            if pred.get(slot, "none") == gold.get(slot, "none"):
                hits += 1
    return hits / total


def per_slot_accuracy(
    preds: PredictionSet, golds: PredictionSet, slot_inventory: tuple[str, ...]
) -> dict[str, float]:
    _check_keys(preds, golds)
    pred_map, gold_map = preds.as_dict(), golds.as_dict()
    out = {}
    for slot in slot_inventory:
        hits = sum(
            1
            for key in gold_map
            if _normalized_state(pred_map[key]).get(slot, "none")
            == _normalized_state(gold_map[key]).get(slot, "none")
        )
        out[slot] = hits / len(gold_map)
    return out


def _restrict(pred_set: PredictionSet, slots: set[str]) -> PredictionSet:
    return PredictionSet(
        states=tuple(
            (key, tuple((s, v) for s, v in state if s in slots))
            for key, state in pred_set.states
        )
    )


@dataclass(frozen=True)
class EvalReport:
    joint_goal_accuracy: float
    slot_accuracy: float
    per_slot: dict[str, float]
    per_domain: dict[str, tuple[float, float]]
    turns: int
    dialogues: int

    def __post_init__(self):
        fractions = [self.joint_goal_accuracy, self.slot_accuracy]
        fractions += list(self.per_slot.values())
        for jga, sa in self.per_domain.values():
            fractions += [jga, sa]
        for f in fractions:
            if not 0.0 <= f <= 1.0:
                raise EvalError(f"metric outside [0,1]: {f}")

    def as_dict(self) -> dict:
        return {
            "joint_goal_accuracy": self.joint_goal_accuracy,
            "slot_accuracy": self.slot_accuracy,
            "per_slot": dict(sorted(self.per_slot.items())),
            "per_domain": {
                d: {"joint_goal_accuracy": jga, "slot_accuracy": sa}
                for d, (jga, sa) in sorted(self.per_domain.items())
            },
            "turns": self.turns,
            "dialogues": self.dialogues,
        }


def build_report(
    preds: PredictionSet, golds: PredictionSet, schema: SchemaSet
) -> EvalReport:
    inventory = tuple(s.name for s in schema.informable_slots())
    per_domain = {}
    for dom in schema.domain_names:
        dom_slots = {s.name for s in schema.domain(dom).informable_slots}
        dom_preds = _restrict(preds, dom_slots)
        dom_golds = _restrict(golds, dom_slots)
        per_domain[dom] = (
            joint_goal_accuracy(dom_preds, dom_golds),
            slot_accuracy(dom_preds, dom_golds, tuple(sorted(dom_slots))),
        )
    dialogues = len({did for did, _ in golds.keys})
    return EvalReport(
        joint_goal_accuracy=joint_goal_accuracy(preds, golds),
        slot_accuracy=slot_accuracy(preds, golds, inventory),
        per_slot=per_slot_accuracy(preds, golds, inventory),
        per_domain=per_domain,
        turns=len(golds),
        dialogues=dialogues,
    )


def format_report_text(report: EvalReport) -> str:
    lines = [
        f"turns: {report.turns}   dialogues: {report.dialogues}",
        f"joint goal accuracy: {report.joint_goal_accuracy:.4f}",
        f"slot accuracy:       {report.slot_accuracy:.4f}",
        "per-domain (JGA / SA):",
    ]
    for dom, (jga, sa) in sorted(report.per_domain.items()):
        lines.append(f"  {dom:<12} {jga:.4f} / {sa:.4f}")
    return "\n".join(lines) + "\n"


def per_slot_csv(report: EvalReport) -> str:
    lines = ["slot,accuracy"]
    for slot, acc in sorted(report.per_slot.items()):
        lines.append(f"{slot},{acc:.6f}")
    return "\n".join(lines) + "\n"


def zero_shot_coverage(zero_acc: float, full_acc: float) -> float:
    """Ratio of zero-shot accuracy to full-data accuracy."""
    if full_acc <= 0.0:
        raise EvalError(
            f"coverage undefined: full-data accuracy must be positive, got {full_acc}"
        )
    return zero_acc / full_acc


def labeler_intrinsic_eval(
    corpus: Corpus, backend: LabelerBackend, schema: SchemaSet
) -> tuple[float, dict[str, float]]:
    """Re-annotate gold dialogue contexts and score against their gold states.

    Candidate options come from each dialogue's own gold states, the
    training-time rule, so the gold answer is always available.
    """
    pred_states = []
    gold_states = []
    for d in corpus.dialogues:
        union_pairs: list[tuple[str, str]] = []
        for ann in d.annotations:
            union_pairs.extend(ann.state)
        candidates = StateCandidateSet(from_goal=tuple(union_pairs), from_api=())
        annotated = annotate_dialogue(d.dialogue, candidates, schema, backend)
        for i, ((_, ann), gold) in enumerate(zip(annotated, d.annotations), start=1):
            pred_states.append(((d.id, i), ann.state))
            gold_states.append(((d.id, i), gold.state))
    preds = PredictionSet(states=tuple(pred_states))
    golds = PredictionSet(states=tuple(gold_states))
    jga = joint_goal_accuracy(preds, golds)
    per_domain = {}
    for dom in schema.domain_names:
        dom_slots = {s.name for s in schema.domain(dom).informable_slots}
        per_domain[dom] = joint_goal_accuracy(
            _restrict(preds, dom_slots), _restrict(golds, dom_slots)
        )
    return jga, per_domain


def perplexity(token_logprobs) -> float | None:
    """exp(-mean log-likelihood) over target tokens, None when unavailable."""
    if token_logprobs is None:
        return None
    logprobs = list(token_logprobs)
    if not logprobs:
        return None
    return math.exp(-sum(logprobs) / len(logprobs))


def corpus_stats(corpus: Corpus) -> dict[str, int]:
    """Dialogue, turn, and whitespace-token counts."""
    dialogues = len(corpus)
    turns = sum(len(d.dialogue) for d in corpus.dialogues)
    tokens = sum(
        token_count(t.system) + token_count(t.user)
        for d in corpus.dialogues
        for t in d.dialogue.turns
    )
    return {"dialogues": dialogues, "turns": turns, "tokens": tokens}


def save_report(path, report: EvalReport) -> None:
    Path(path).write_text(
        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_report_accuracy(path, metric: str = "joint_goal_accuracy") -> float:
    blob = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return float(blob[metric])
    except (KeyError, TypeError, ValueError) as exc:
        raise EvalError(f"{path}: report lacks numeric {metric!r}") from exc
