"""Canonical corpus types, tokenization, and sample file I/O.

A corpus file is newline-delimited JSON (samples.jsonl), one object per line:

    {"id": str, "domain": str, "text_corrupted": str|null, "text_fixed": str|null}

Field absence and null are equivalent. Every sample carries at least one of
the two texts; ids are unique within a file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError

# Instance-id suffixes used when a paired sample is expanded into labeled
# instances. Part of the interchange contract: token_scores.jsonl and
# embeddings.jsonl producers must use the same ids.
SUFFIX_CORRUPTED = "::corrupted"
SUFFIX_FIXED = "::fixed"


class TokenKind(str, Enum):
    WORD = "word"
    NUMBER = "number"
    PUNCTUATION = "punctuation"
    LINEBREAK = "linebreak"


@dataclass(frozen=True)
class Token:
    surface: str
    kind: TokenKind
    span: tuple[int, int]  # byte offsets into the UTF-8 encoding of the source


@dataclass(frozen=True)
class TextSample:
    id: str
    domain: str
    text_corrupted: str | None = None
    text_fixed: str | None = None

    def __post_init__(self) -> None:
        if self.text_corrupted is None and self.text_fixed is None:
            raise DataError(f"sample {self.id!r} has no text")


@dataclass(frozen=True)
class LabeledInstance:
    id: str
    domain: str
    text: str
    label: int  # 0 = correct, 1 = corrupted

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise DataError(f"instance {self.id!r}: label must be 0 or 1")


# Characters that stay inside a word when flanked by letters on both sides
# ("two-step", "д'Артаньян"). Leading/trailing occurrences are punctuation.
_WORD_CONNECTORS = frozenset("-'’")


def tokenize(text: str) -> list[Token]:
    """Split text into word / number / punctuation / linebreak tokens.

    Words are maximal letter runs, possibly with internal hyphens or
    apostrophes; numbers are maximal digit runs; every newline is its own
    linebreak token; any other non-whitespace character is a single
    punctuation token. Other whitespace is skipped. Mixed letter-digit runs
    split at the boundary. Spans are byte offsets and the token sequence plus
    skipped whitespace reconstructs the source exactly.
    """
    tokens: list[Token] = []
    i = 0
    byte_pos = 0
    n = len(text)
    while i < n:
        ch = text[i]
        width = len(ch.encode("utf-8"))
        if ch == "\n":
            tokens.append(Token("\n", TokenKind.LINEBREAK, (byte_pos, byte_pos + width)))
            i += 1
            byte_pos += width
        elif ch.isspace():
            i += 1
            byte_pos += width
        elif ch.isalpha():
            start_i, start_b = i, byte_pos
            while i < n:
                c = text[i]
                if c.isalpha():
                    i += 1
                    byte_pos += len(c.encode("utf-8"))
                elif c in _WORD_CONNECTORS and i + 1 < n and text[i + 1].isalpha():
                    i += 1
                    byte_pos += len(c.encode("utf-8"))
                else:
                    break
            tokens.append(Token(text[start_i:i], TokenKind.WORD, (start_b, byte_pos)))
        elif ch.isdigit():
            start_i, start_b = i, byte_pos
            while i < n and text[i].isdigit():
                byte_pos += len(text[i].encode("utf-8"))
                i += 1
            tokens.append(Token(text[start_i:i], TokenKind.NUMBER, (start_b, byte_pos)))
        else:
            tokens.append(Token(ch, TokenKind.PUNCTUATION, (byte_pos, byte_pos + width)))
            i += 1
            byte_pos += width
    return tokens


def surface_kind(surface: str) -> TokenKind:
    """Token kind of a single-token surface (helper for edit categorization)."""
    toks = tokenize(surface)
    if len(toks) != 1:
        raise ValueError(f"not a single token surface: {surface!r}")
    return toks[0].kind


def read_samples(path: str | Path) -> list[TextSample]:
    """Read samples.jsonl. Unknown fields are ignored; order is preserved."""
    samples: list[TextSample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "id" not in obj:
                raise DataError(f"{path}: line {lineno}: record has no id")
            sid = str(obj["id"])
            if sid in seen:
                raise DataError(f"{path}: line {lineno}: duplicate id {sid!r}")
            seen.add(sid)
            corrupted = obj.get("text_corrupted")
            fixed = obj.get("text_fixed")
            if corrupted is None and fixed is None:
                raise DataError(f"{path}: line {lineno}: sample has no text")
            samples.append(
                TextSample(
                    id=sid,
                    domain=str(obj.get("domain") or ""),
                    text_corrupted=corrupted,
                    text_fixed=fixed,
                )
            )
    return samples


def write_samples(samples: Iterable[TextSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            obj = {
                "id": s.id,
                "domain": s.domain,
                "text_corrupted": s.text_corrupted,
                "text_fixed": s.text_fixed,
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def expand_pairs(samples: Sequence[TextSample]) -> list[LabeledInstance]:
    """Expand paired samples into labeled instances.

    Each corrupted text becomes one instance with label 1, each fixed text one
    with label 0; ids get a side suffix so they stay unique.
    """
    instances: list[LabeledInstance] = []
    for s in samples:
        if s.text_corrupted is not None:
            instances.append(
                LabeledInstance(s.id + SUFFIX_CORRUPTED, s.domain, s.text_corrupted, 1)
            )
        if s.text_fixed is not None:
            instances.append(
                LabeledInstance(s.id + SUFFIX_FIXED, s.domain, s.text_fixed, 0)
            )
    return instances
