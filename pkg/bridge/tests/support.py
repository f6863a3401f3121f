"""Shared paths, the smoke-sized training recipe, and file helpers."""

import json
from pathlib import Path

from wozbridge.training import TrainingConfig

REPO = Path(__file__).resolve().parents[2]
PROTOCOL = REPO / "fixtures" / "protocol"
TRAINING = REPO / "fixtures" / "training"

# Tiny dims and a real learning rate; the defaults are sized for actual
# training runs, not smoke tests.
SMOKE = TrainingConfig(
    epochs=2,
    batch_size=4,
    warmup_steps=2,
    emb_dim=16,
    hidden_dim=32,
    learning_rate=1e-3,
)


def load_fixture(name: str) -> dict:
    return json.loads((PROTOCOL / name).read_text(encoding="utf-8"))


def read_records(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh]


def write_records(path, records) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return Path(path)
