#!/usr/bin/env python3
"""Optional reading-comprehension pretraining for the option scorer.

Converts a DREAM-format JSON file (entries of [dialogue turns, questions
with "choice" lists and an "answer" string, id]) into the scorer's record
format, then runs the standard training loop on the converted records. This
is an initialization step to run before fine-tuning on emitted labeling
records; nothing in the default pipeline depends on it.
"""

import argparse
import json
import sys
from pathlib import Path

from wozbridge.errors import BridgeDataError
from wozbridge.training import TrainingConfig, train_labeler


def convert(dream_path: Path, records_path: Path) -> int:
    try:
        entries = json.loads(dream_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BridgeDataError(f"cannot read DREAM file {dream_path}: {exc}") from exc
    if not isinstance(entries, list):
        raise BridgeDataError(f"{dream_path}: expected a JSON array of entries")

    count = 0
    with open(records_path, "w", encoding="utf-8") as fh:
        for entry in entries:
            turns, questions, entry_id = entry
            context = " ".join(turns)
            for q in questions:
                choices = q["choice"]
                try:
                    answer_index = choices.index(q["answer"])
                except ValueError:
                    raise BridgeDataError(
                        f"{dream_path}: {entry_id}: answer not among choices"
                    ) from None
                fh.write(json.dumps({
                    "context": context,
                    "question": q["question"],
                    "options": choices,
                    "answer_index": answer_index,
                    "weight": 1.0,
                    "meta": {"dialogue_id": entry_id, "turn": 0, "slot": None},
                }, sort_keys=True) + "\n")
                count += 1
    return count


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="DREAM-format JSON file")
    ap.add_argument("--out", required=True, help="checkpoint path to write")
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--emb-dim", type=int, default=32)
    ap.add_argument("--hidden-dim", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    records_path = Path(args.out).with_suffix(".dream_records.jsonl")
    n = convert(Path(args.data), records_path)
    print(f"converted {n} multiple-choice records -> {records_path}")

    config = TrainingConfig(epochs=args.epochs, emb_dim=args.emb_dim,
                            hidden_dim=args.hidden_dim, seed=args.seed)
    summary = train_labeler(records_path, args.out, config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
