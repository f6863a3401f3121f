"""String normalization and token counting used across modules."""

import re

_WS = re.compile(r"\s+")

# Spellings that all mean "the user does not care"; folded to one canonical form.
_DONTCARE_FORMS = {"dontcare", "dont care", "don't care", "do n't care", "do not care"}


def normalize_value(value: str) -> str:
    """Lowercase, trim, collapse internal whitespace; fold dontcare spellings."""
    norm = _WS.sub(" ", value.strip().lower())
    if norm in _DONTCARE_FORMS:
        return "dontcare"
    return norm


def token_count(text: str) -> int:
    """Whitespace token count; the toolkit's documented tokenization."""
    return len(text.split())
