"""Torch models behind the two endpoints, plus checkpoint (de)serialization.

Both are deliberately small recurrent models built from the training file's
own vocabulary: a GRU encoder/decoder for generation and a GRU encoder with
a scalar head for option scoring. Checkpoints are plain torch saves holding
the vocabulary, the dimensions, and the weights, so a served model needs no
files beyond its checkpoint.
"""

from __future__ import annotations

import torch
from torch import nn

from .data import option_input_text
from .errors import BridgeConfigError
from .vocab import Vocab


class Seq2SeqModule(nn.Module):
    def __init__(self, vocab_size: int, emb_dim: int, hidden_dim: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, emb_dim)
        self.encoder = nn.GRU(emb_dim, hidden_dim, batch_first=True)
        self.decoder = nn.GRU(emb_dim, hidden_dim, batch_first=True)
        self.out = nn.Linear(hidden_dim, vocab_size)

    def encode(self, src: torch.Tensor) -> torch.Tensor:
        _, hidden = self.encoder(self.embedding(src))
        return hidden

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        hidden = self.encode(src)
        dec_out, _ = self.decoder(self.embedding(tgt_in), hidden)
        return self.out(dec_out)


class OptionScorerModule(nn.Module):
    def __init__(self, vocab_size: int, emb_dim: int, hidden_dim: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, emb_dim)
        self.encoder = nn.GRU(emb_dim, hidden_dim, batch_first=True)
        self.head = nn.Linear(hidden_dim, 1)

    def forward(self, ids: torch.Tensor, lengths: torch.Tensor) -> torch.Tensor:
        packed = nn.utils.rnn.pack_padded_sequence(
            self.embedding(ids), lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        _, hidden = self.encoder(packed)
        return self.head(hidden[-1]).squeeze(-1)


def _filter_top_p(probs: torch.Tensor, top_p: float) -> torch.Tensor:
    """Zero out everything outside the smallest mass-p prefix, renormalized."""
    sorted_probs, order = torch.sort(probs, descending=True)
    cumulative = torch.cumsum(sorted_probs, dim=-1)
    keep = cumulative - sorted_probs < top_p  # always keeps the top token
    filtered = torch.zeros_like(probs)
    filtered[order[keep]] = sorted_probs[keep]
    return filtered / filtered.sum()


class TorchGenerator:
    """Serves /generate from a trained sequence-to-sequence checkpoint."""

    kind = "collector"

    def __init__(
        self,
        vocab: Vocab,
        module: Seq2SeqModule,
        emb_dim: int,
        hidden_dim: int,
        device: torch.device = torch.device("cpu"),
    ):
        self.vocab = vocab
        self.module = module.eval()
        self.emb_dim = emb_dim
        self.hidden_dim = hidden_dim
        self.device = device

    @torch.no_grad()
    def generate_text_response(
        self,
        input_text: str,
        top_p: float,
        temperature: float,
        max_tokens: int,
        seed: int,
        deterministic: bool = False,
    ) -> tuple[str, list[float]]:
        src = torch.tensor([self.vocab.encode(input_text)], dtype=torch.long, device=self.device)
        hidden = self.module.encode(src)
        generator = torch.Generator(device=self.device)
        generator.manual_seed(seed & 0x7FFFFFFFFFFFFFFF)

        ids: list[int] = []
        logprobs: list[float] = []
        token = torch.tensor([[self.vocab.bos_id]], dtype=torch.long, device=self.device)
        for _ in range(max_tokens):
            dec_out, hidden = self.module.decoder(self.module.embedding(token), hidden)
            logits = self.module.out(dec_out[0, -1])
            logits[self.vocab.pad_id] = float("-inf")
            logits[self.vocab.bos_id] = float("-inf")
            scaled = logits / max(temperature, 1e-6)
            probs = torch.softmax(scaled, dim=-1)
            if deterministic:
                next_id = int(torch.argmax(probs))
            else:
                next_id = int(
                    torch.multinomial(_filter_top_p(probs, top_p), 1, generator=generator)
                )
            logprobs.append(float(torch.log_softmax(scaled, dim=-1)[next_id]))
            if next_id == self.vocab.eos_id:
                break
            ids.append(next_id)
            token = torch.tensor([[next_id]], dtype=torch.long, device=self.device)
        return self.vocab.decode(ids), logprobs


class TorchScorer:
    """Serves /score: one independent logit per option string."""

    kind = "labeler"

    def __init__(
        self,
        vocab: Vocab,
        module: OptionScorerModule,
        emb_dim: int,
        hidden_dim: int,
        device: torch.device = torch.device("cpu"),
    ):
        self.vocab = vocab
        self.module = module.eval()
        self.emb_dim = emb_dim
        self.hidden_dim = hidden_dim
        self.device = device

    @torch.no_grad()
    def score(self, context: str, question: str, options: list[str]) -> list[float]:
        logits = []
        for option in options:
            ids = torch.tensor(
                [self.vocab.encode(option_input_text(context, question, option))],
                dtype=torch.long,
                device=self.device,
            )
            lengths = torch.tensor([ids.shape[1]])
            logits.append(float(self.module(ids, lengths)[0]))
        return logits


class EchoGenerator:
    """Degenerate /generate model: replies with the input's final segment.

    Exists for protocol smoke tests where a trained model is beside the
    point; everything after the last closing separator comes back verbatim.
    """

    kind = "collector"

    def generate_text_response(
        self, input_text, top_p, temperature, max_tokens, seed, deterministic=False
    ):
        suffix = input_text.rsplit("</s>", 1)[-1].strip()
        return suffix or input_text.strip(), None


def save_checkpoint(path, model) -> None:
    blob = {
        "kind": model.kind,
        "tokens": model.vocab.tokens,
        "emb_dim": model.emb_dim,
        "hidden_dim": model.hidden_dim,
        "state": model.module.state_dict(),
    }
    torch.save(blob, path)


def load_checkpoint(path, device: str = "cpu"):
    """Rebuild a TorchGenerator or TorchScorer from a checkpoint file."""
    try:
        dev = torch.device(device)
    except RuntimeError as exc:
        raise BridgeConfigError(f"unknown device {device!r}: {exc}") from exc
    blob = torch.load(path, map_location="cpu", weights_only=True)
    for key in ("kind", "tokens", "emb_dim", "hidden_dim", "state"):
        if key not in blob:
            raise BridgeConfigError(f"{path}: not a model checkpoint (missing {key!r})")
    vocab = Vocab(blob["tokens"])
    if blob["kind"] == "collector":
        module = Seq2SeqModule(len(vocab), blob["emb_dim"], blob["hidden_dim"])
    elif blob["kind"] == "labeler":
        module = OptionScorerModule(len(vocab), blob["emb_dim"], blob["hidden_dim"])
    else:
        raise BridgeConfigError(f"{path}: unknown checkpoint kind {blob['kind']!r}")
    module.load_state_dict(blob["state"])
    try:
        module.to(dev)
    except RuntimeError as exc:
        raise BridgeConfigError(f"cannot place model on device {device}: {exc}") from exc
    cls = TorchGenerator if blob["kind"] == "collector" else TorchScorer
    return cls(vocab, module, blob["emb_dim"], blob["hidden_dim"], device=dev)
