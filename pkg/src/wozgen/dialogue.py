"""Dialogue turns and the role-token wire text shared by generation and labeling."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import MalformedGenerationError
from .text import token_count

SYSTEM_TOKEN = "<system>"
USER_TOKEN = "<user>"

log = logging.getLogger("wozgen.dialogue")


@dataclass(frozen=True)
class Turn:
    """One exchange: system utterance followed by the user's reply."""

    system: str
    user: str


@dataclass(frozen=True)
class Dialogue:
    """An ordered sequence of (system, user) exchanges.

    The opening system utterance may be empty (user-initiated dialogues, the
    norm in ingested corpora); every other utterance is non-empty.
    """

    turns: tuple[Turn, ...]
    raw_text: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.turns:
            raise MalformedGenerationError("dialogue has no turns", self.raw_text)
        for i, turn in enumerate(self.turns):
            if i > 0 and not turn.system.strip():
                raise MalformedGenerationError(
                    f"empty system utterance at turn {i + 1}", self.raw_text
                )
            if not turn.user.strip():
                raise MalformedGenerationError(
                    f"empty user utterance at turn {i + 1}", self.raw_text
                )

    def __len__(self) -> int:
        return len(self.turns)

    def prefix(self, t: int) -> "Dialogue":
        """The dialogue context up to and including turn t (1-based)."""
        if not 1 <= t <= len(self.turns):
            raise ValueError(f"turn index {t} out of range 1..{len(self.turns)}")
        return Dialogue(turns=self.turns[:t])


def serialize_dialogue(dialogue: Dialogue) -> str:
    """Flatten a dialogue to role-token wire text."""
    parts: list[str] = []
    for turn in dialogue.turns:
        parts.append(SYSTEM_TOKEN)
        if turn.system:
            parts.append(turn.system)
        parts.append(USER_TOKEN)
        parts.append(turn.user)
    return " ".join(parts)


def serialize_prefix(dialogue: Dialogue, t: int, max_tokens: int | None = None) -> str:
    """Serialize the context D_t, truncating oldest exchanges past ``max_tokens``.

    Truncation drops whole exchanges from the front, always keeping the most
    recent one; the cap counts whitespace tokens of the serialized text.
    """
    turns = dialogue.prefix(t).turns
    text = serialize_dialogue(Dialogue(turns=turns))
    if max_tokens is None:
        return text
    while len(turns) > 1 and token_count(text) > max_tokens:
        turns = turns[1:]
        text = serialize_dialogue(Dialogue(turns=turns))
    return text


def parse_dialogue(raw: str) -> Dialogue:
    """Parse generated role-token text into a Dialogue.

    Role markers must strictly alternate system, user, system, ... starting
    with the system marker. A trailing unpaired system utterance is truncated
    (logged); any other structural violation raises MalformedGenerationError.
    """
    tokens = raw.split()
    if not tokens:
        raise MalformedGenerationError("empty generation", raw)
    if tokens[0] != SYSTEM_TOKEN:
        raise MalformedGenerationError(
            f"generation must start with {SYSTEM_TOKEN}, got {tokens[0]!r}", raw
        )

    # Split into (role, utterance) segments in order of appearance.
    segments: list[tuple[str, str]] = []
    current_role = None
    current: list[str] = []
    for tok in tokens:
        if tok in (SYSTEM_TOKEN, USER_TOKEN):
            if current_role is not None:
                segments.append((current_role, " ".join(current)))
            current_role, current = tok, []
        else:
            current.append(tok)
    segments.append((current_role, " ".join(current)))

    for i, (role, _) in enumerate(segments):
        expected = SYSTEM_TOKEN if i % 2 == 0 else USER_TOKEN
        if role != expected:
            raise MalformedGenerationError(
                f"role markers do not alternate at segment {i + 1}", raw
            )

    if len(segments) % 2 == 1:
        log.info("truncating trailing unpaired system utterance")
        segments = segments[:-1]
    if not segments:
        raise MalformedGenerationError("generation ends before the first user turn", raw)

    turns = tuple(
        Turn(system=segments[i][1], user=segments[i + 1][1])
        for i in range(0, len(segments), 2)
    )
    return Dialogue(turns=turns, raw_text=raw)
