"""Training loops for both model kinds.

Generation models train with teacher forcing and label-smoothed
cross-entropy, where the smoothing value comes from the training file's own
metadata. Scoring models train per record: one logit per option, softmax
cross-entropy against the answer index, scaled by the record's emitted
weight (so weighted answers count exactly as written, no reweighting here).

Model selection: the collector keeps the epoch with the best validation
loss, the labeler the epoch with the best validation choice accuracy. The
upstream recipe names neither metric, so this is a documented choice.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass

import torch
from torch import nn

from .data import (
    load_collector_records,
    load_labeler_records,
    option_input_text,
)
from .errors import BridgeConfigError
from .models import (
    OptionScorerModule,
    Seq2SeqModule,
    TorchGenerator,
    TorchScorer,
    save_checkpoint,
)
from .vocab import Vocab

COLLECTOR_EPOCHS = 30
LABELER_EPOCHS = 10


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-5
    warmup_steps: int = 1000
    batch_size: int = 32
    epochs: int | None = None  # None: 30 for the collector, 10 for the labeler
    label_smoothing: float = 0.1
    beta: float = 5.0
    emb_dim: int = 32
    hidden_dim: int = 64
    val_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise BridgeConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.warmup_steps < 0 or self.batch_size < 1:
            raise BridgeConfigError("warmup_steps must be >= 0 and batch_size >= 1")
        if self.epochs is not None and self.epochs < 1:
            raise BridgeConfigError(f"epochs must be positive, got {self.epochs}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise BridgeConfigError(f"label smoothing out of range: {self.label_smoothing}")
        if self.beta < 1.0:
            raise BridgeConfigError(f"beta must be >= 1, got {self.beta}")
        if not 0.0 < self.val_fraction < 1.0:
            raise BridgeConfigError(f"val_fraction out of range: {self.val_fraction}")


def _split(records: list, config: TrainingConfig) -> tuple[list, list]:
    order = list(range(len(records)))
    random.Random(config.seed).shuffle(order)
    n_val = max(1, round(config.val_fraction * len(records))) if len(records) > 1 else 0
    val_idx = set(order[:n_val])
    train = [r for i, r in enumerate(records) if i not in val_idx]
    val = [r for i, r in enumerate(records) if i in val_idx]
    return train, (val or train)


def _warmup_scheduler(optimizer, warmup_steps: int):
    def factor(step: int) -> float:
        if warmup_steps == 0:
            return 1.0
        return min(1.0, (step + 1) / warmup_steps)

    return torch.optim.lr_scheduler.LambdaLR(optimizer, factor)


def _pad_batch(seqs: list[list[int]], pad_id: int) -> torch.Tensor:
    width = max(len(s) for s in seqs)
    return torch.tensor(
        [s + [pad_id] * (width - len(s)) for s in seqs], dtype=torch.long
    )


def train_collector(path, out_path, config: TrainingConfig = TrainingConfig()) -> dict:
    """Fit a generation model on emitted (source, target) examples."""
    records, file_smoothing = load_collector_records(path)
    smoothing = file_smoothing if file_smoothing > 0 else config.label_smoothing
    torch.manual_seed(config.seed)

    vocab = Vocab.build(
        [r["source"] for r in records] + [r["target"] for r in records]
    )
    module = Seq2SeqModule(len(vocab), config.emb_dim, config.hidden_dim)
    optimizer = torch.optim.Adam(module.parameters(), lr=config.learning_rate)
    scheduler = _warmup_scheduler(optimizer, config.warmup_steps)
    loss_fn = nn.CrossEntropyLoss(ignore_index=vocab.pad_id, label_smoothing=smoothing)
    train, val = _split(records, config)
    epochs = config.epochs if config.epochs is not None else COLLECTOR_EPOCHS

    def batch_loss(batch: list[dict]) -> torch.Tensor:
        src = _pad_batch([vocab.encode(r["source"]) for r in batch], vocab.pad_id)
        tgt = [vocab.encode(r["target"], add_bos=True, add_eos=True) for r in batch]
        tgt_in = _pad_batch([t[:-1] for t in tgt], vocab.pad_id)
        tgt_out = _pad_batch([t[1:] for t in tgt], vocab.pad_id)
        logits = module(src, tgt_in)
        return loss_fn(logits.reshape(-1, len(vocab)), tgt_out.reshape(-1))

    best_state, best_val, best_epoch = None, float("inf"), -1
    for epoch in range(epochs):
        module.train()
        for start in range(0, len(train), config.batch_size):
            optimizer.zero_grad()
            loss = batch_loss(train[start : start + config.batch_size])
            loss.backward()
            optimizer.step()
            scheduler.step()
        module.eval()
        with torch.no_grad():
            val_loss = float(batch_loss(val))
        if val_loss < best_val:
            best_state = copy.deepcopy(module.state_dict())
            best_val, best_epoch = val_loss, epoch

    module.load_state_dict(best_state)
    model = TorchGenerator(vocab, module, config.emb_dim, config.hidden_dim)
    save_checkpoint(out_path, model)
    return {
        "kind": "collector",
        "records": len(records),
        "vocab": len(vocab),
        "epochs": epochs,
        "label_smoothing": smoothing,
        "best_epoch": best_epoch,
        "best_val_loss": best_val,
    }


def train_labeler(path, out_path, config: TrainingConfig = TrainingConfig()) -> dict:
    """Fit an option scorer on emitted multiple-choice records."""
    records = load_labeler_records(path)
    torch.manual_seed(config.seed)

    vocab = Vocab.build(
        option_input_text(r["context"], r["question"], o)
        for r in records
        for o in r["options"]
    )
    module = OptionScorerModule(len(vocab), config.emb_dim, config.hidden_dim)
    optimizer = torch.optim.Adam(module.parameters(), lr=config.learning_rate)
    scheduler = _warmup_scheduler(optimizer, config.warmup_steps)
    train, val = _split(records, config)
    epochs = config.epochs if config.epochs is not None else LABELER_EPOCHS

    def record_logits(rec: dict) -> torch.Tensor:
        encoded = [
            vocab.encode(option_input_text(rec["context"], rec["question"], o))
            for o in rec["options"]
        ]
        ids = _pad_batch(encoded, vocab.pad_id)
        lengths = torch.tensor([len(e) for e in encoded])
        return module(ids, lengths)

    def record_loss(rec: dict) -> torch.Tensor:
        logits = record_logits(rec).unsqueeze(0)
        target = torch.tensor([rec["answer_index"]])
        # emitted weight applied verbatim; records already encode the
        # non-None upweighting
        return rec["weight"] * nn.functional.cross_entropy(logits, target)

    best_state, best_acc, best_epoch = None, -1.0, -1
    for epoch in range(epochs):
        module.train()
        for start in range(0, len(train), config.batch_size):
            optimizer.zero_grad()
            chunk = train[start : start + config.batch_size]
            loss = sum(record_loss(r) for r in chunk) / len(chunk)
            loss.backward()
            optimizer.step()
            scheduler.step()
        module.eval()
        with torch.no_grad():
            hits = sum(
                int(int(torch.argmax(record_logits(r))) == r["answer_index"]) for r in val
            )
        acc = hits / len(val)
        if acc > best_acc:
            best_state = copy.deepcopy(module.state_dict())
            best_acc, best_epoch = acc, epoch

    module.load_state_dict(best_state)
    model = TorchScorer(vocab, module, config.emb_dim, config.hidden_dim)
    save_checkpoint(out_path, model)
    return {
        "kind": "labeler",
        "records": len(records),
        "vocab": len(vocab),
        "epochs": epochs,
        "best_epoch": best_epoch,
        "best_val_accuracy": best_acc,
    }
