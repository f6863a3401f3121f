"""Readers for the toolkit's emitted training files.

Both formats are JSON lines. Generation examples carry {source, target,
meta.label_smoothing}; labeling records carry {context, question, options,
answer_index, weight, meta}. Validation here is strict: a file the toolkit
did not emit (or truncated) should fail loudly before training starts.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import BridgeDataError


def _read_lines(path) -> list[dict]:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BridgeDataError(f"cannot read training file {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeDataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(rec, dict):
            raise BridgeDataError(f"{path}:{lineno}: record is not an object")
        records.append(rec)
    if not records:
        raise BridgeDataError(f"{path}: no training records")
    return records


def load_collector_records(path) -> tuple[list[dict], float]:
    """Returns (records, label_smoothing declared by the file)."""
    records = _read_lines(path)
    smoothings = set()
    for i, rec in enumerate(records, start=1):
        if not isinstance(rec.get("source"), str) or not isinstance(rec.get("target"), str):
            raise BridgeDataError(f"{path}:{i}: needs string 'source' and 'target'")
        if not rec["source"].split() or not rec["target"].split():
            raise BridgeDataError(f"{path}:{i}: empty source or target")
        meta = rec.get("meta") or {}
        smoothings.add(float(meta.get("label_smoothing", 0.0)))
    if len(smoothings) != 1:
        raise BridgeDataError(
            f"{path}: records disagree on label smoothing ({sorted(smoothings)})"
        )
    return records, smoothings.pop()


def load_labeler_records(path) -> list[dict]:
    records = _read_lines(path)
    for i, rec in enumerate(records, start=1):
        options = rec.get("options")
        if not isinstance(options, list) or not options or not all(
            isinstance(o, str) for o in options
        ):
            raise BridgeDataError(f"{path}:{i}: 'options' must be a non-empty string list")
        idx = rec.get("answer_index")
        if not isinstance(idx, int) or not 0 <= idx < len(options):
            raise BridgeDataError(f"{path}:{i}: 'answer_index' out of range")
        if not isinstance(rec.get("context"), str) or not isinstance(rec.get("question"), str):
            raise BridgeDataError(f"{path}:{i}: needs string 'context' and 'question'")
        if not isinstance(rec.get("weight"), (int, float)) or rec["weight"] <= 0:
            raise BridgeDataError(f"{path}:{i}: 'weight' must be a positive number")
    return records


def option_input_text(context: str, question: str, option: str) -> str:
    """One scoring input per option; the scorer never sees options jointly."""
    return f"<s> {context} </s> {question} </s> {option} </s>"
