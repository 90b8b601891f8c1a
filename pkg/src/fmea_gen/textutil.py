"""Text normalization shared by embedding, voting, and metric code.

All similarity-adjacent operations must agree on one tokenizer, otherwise
retrieval, fuzzy voting, and evaluation drift apart in subtle ways.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit."""
    return _TOKEN_RE.findall(text.lower())


def normalize_name(text: str) -> str:
    """Canonical form for case-insensitive identity checks."""
    return " ".join(text.lower().split())


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash; stable across processes and Python versions."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def stable_seed(*parts: object) -> int:
    """Derive a reproducible RNG seed from arbitrary labeled parts."""
    return fnv1a_64("|".join(str(p) for p in parts).encode("utf-8"))
