"""Seeded rule-based generation of (correct, corrupted) text pairs.

Five distortion rules operate on raw text through token byte spans: altering
a word's grammatical form via an inflection table, deleting or swapping
prepositions, injecting misspellings (confusion table with a character-level
fallback), splitting or merging words, and perturbing commas. Each record's
randomness is derived from (seed, record id, text) so any subset of a dataset
can be regenerated independently.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .corpus import Token, TokenKind, tokenize
from .errors import DataError

Span = tuple[int, int]  # byte offsets into the rule's output text
RuleResult = Optional[tuple[str, Span]]

RULE_NAMES = ("grammar_form", "preposition", "misspelling", "split_merge", "punctuation")


@dataclass(frozen=True)
class Resources:
    morphology: dict[str, list[str]]
    confusions: dict[str, list[str]]
    prepositions: list[str]


@dataclass(frozen=True)
class CorruptionConfig:
    seed: int
    resources: Resources
    rule_weights: dict[str, float] = field(
        default_factory=lambda: {name: 1.0 for name in RULE_NAMES}
    )
    max_edits_per_text: int = 2

    def __post_init__(self) -> None:
        unknown = set(self.rule_weights) - set(RULE_NAMES)
        if unknown:
            raise DataError(f"unknown rule names: {sorted(unknown)}")
        if any(w < 0 for w in self.rule_weights.values()):
            raise DataError("rule weights must be nonnegative")
        if sum(self.rule_weights.values()) <= 0:
            raise DataError("rule weights must not all be zero")
        if self.max_edits_per_text < 1:
            raise DataError("max_edits_per_text must be >= 1")


@dataclass(frozen=True)
class CorruptionRecord:
    id: str
    original: str
    corrupted: str
    applied: list[tuple[str, Span]]
    domain: str

    def __post_init__(self) -> None:
        if self.corrupted == self.original:
            raise ValueError("corrupted text equals original")
        if not self.applied:
            raise ValueError("no rules recorded")


def _read_table(path: str | Path) -> dict[str, list[str]]:
    table: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError(f"{path}: need a word and at least one variant: {line!r}")
            table[parts[0].lower()] = [p for p in parts[1:] if p]
    return table


def load_resources(
    morphology: str | Path, confusions: str | Path, prepositions: str | Path
) -> Resources:
    with open(prepositions, encoding="utf-8") as fh:
        preps = sorted({line.strip().lower() for line in fh if line.strip()})
    return Resources(_read_table(morphology), _read_table(confusions), preps)


def default_resources() -> Resources:
    base = Path(__file__).parent / "resources"
    return load_resources(
        base / "morphology.tsv", base / "confusions.tsv", base / "prepositions.txt"
    )


def _derive_rng(seed: int, *parts: object) -> random.Random:
    key = "\x1f".join([str(seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _splice(text: str, start: int, end: int, replacement: str) -> tuple[str, Span]:
    data = text.encode("utf-8")
    repl = replacement.encode("utf-8")
    new = (data[:start] + repl + data[end:]).decode("utf-8")
    return new, (start, start + len(repl))


def _match_case(original: str, replacement: str) -> str:
    if original and replacement and original[0].isupper():
        return replacement[0].upper() + replacement[1:]
    return replacement


def _words(tokens: Sequence[Token]) -> list[Token]:
    return [t for t in tokens if t.kind is TokenKind.WORD]


def distort_grammar_form(text: str, rng: random.Random, res: Resources) -> RuleResult:
    """Replace one known word by a different inflected form of the same lemma."""
    tokens = tokenize(text)
    cands = [
        t
        for t in _words(tokens)
        if t.surface.lower() in res.morphology
        and any(a.lower() != t.surface.lower() for a in res.morphology[t.surface.lower()])
    ]
    if not cands:
        return None
    tok = cands[rng.randrange(len(cands))]
    alts = [a for a in res.morphology[tok.surface.lower()] if a.lower() != tok.surface.lower()]
    alt = _match_case(tok.surface, alts[rng.randrange(len(alts))])
    return _splice(text, tok.span[0], tok.span[1], alt)


def distort_preposition(text: str, rng: random.Random, res: Resources) -> RuleResult:
    """Delete one preposition or replace it by another from the list (50/50)."""
    prep_set = set(res.prepositions)
    tokens = tokenize(text)
    cands = [t for t in _words(tokens) if t.surface.lower() in prep_set]
    if not cands:
        return None
    tok = cands[rng.randrange(len(cands))]
    others = [p for p in res.prepositions if p != tok.surface.lower()]
    if rng.random() < 0.5 or not others:
        return _delete_token_with_space(text, tok)
    repl = _match_case(tok.surface, others[rng.randrange(len(others))])
    return _splice(text, tok.span[0], tok.span[1], repl)


def _delete_token_with_space(text: str, tok: Token) -> tuple[str, Span]:
    data = text.encode("utf-8")
    start, end = tok.span
    if end < len(data) and data[end : end + 1] in (b" ", b"\t"):
        while end < len(data) and data[end : end + 1] in (b" ", b"\t"):
            end += 1
    else:
        while start > 0 and data[start - 1 : start] in (b" ", b"\t"):
            start -= 1
    new = (data[:start] + data[end:]).decode("utf-8")
    return new, (start, start)


def inject_misspelling(text: str, rng: random.Random, res: Resources) -> RuleResult:
    """Misspell one word: confusion-table hit first, else swap/drop/double a letter.

    The character fallback only touches words of 4+ letters; the first
    letter's casing is preserved.
    """
    tokens = tokenize(text)
    table_cands = [t for t in _words(tokens) if t.surface.lower() in res.confusions]
    if table_cands:
        tok = table_cands[rng.randrange(len(table_cands))]
        variants = res.confusions[tok.surface.lower()]
        variant = _match_case(tok.surface, variants[rng.randrange(len(variants))])
        return _splice(text, tok.span[0], tok.span[1], variant)
    fallback = [t for t in _words(tokens) if len(t.surface) >= 4]
    if not fallback:
        return None
    tok = fallback[rng.randrange(len(fallback))]
    s = tok.surface
    for _ in range(10):
        op = rng.randrange(3)
        if op == 0:  # swap adjacent
            pos = rng.randrange(len(s) - 1)
            new = s[:pos] + s[pos + 1] + s[pos] + s[pos + 2 :]
        elif op == 1:  # delete
            pos = rng.randrange(len(s))
            new = s[:pos] + s[pos + 1 :]
        else:  # duplicate
            pos = rng.randrange(len(s))
            new = s[:pos] + s[pos] + s[pos:]
        if new != s:
            return _splice(text, tok.span[0], tok.span[1], new)
    return None


def split_or_merge_words(text: str, rng: random.Random, res: Resources) -> RuleResult:
    """Join two adjacent words, or split one word at an interior position.

    Splits keep at least 2 letters on each side; merges require the gap to be
    plain spaces (never across a linebreak).
    """
    tokens = tokenize(text)
    data = text.encode("utf-8")
    pairs = []
    for t1, t2 in zip(tokens, tokens[1:]):
        if t1.kind is TokenKind.WORD and t2.kind is TokenKind.WORD:
            gap = data[t1.span[1] : t2.span[0]].decode("utf-8")
            if gap and all(c in " \t" for c in gap):
                pairs.append((t1, t2))
    splittable = [t for t in _words(tokens) if len(t.surface) >= 4]
    prefer_merge = rng.random() < 0.5
    if prefer_merge and not pairs:
        prefer_merge = False
    if not prefer_merge and not splittable:
        prefer_merge = bool(pairs)
    if prefer_merge and pairs:
        t1, t2 = pairs[rng.randrange(len(pairs))]
        new = (data[: t1.span[1]] + data[t2.span[0] :]).decode("utf-8")
        return new, (t1.span[0], t1.span[1] + (t2.span[1] - t2.span[0]))
    if splittable:
        tok = splittable[rng.randrange(len(splittable))]
        s = tok.surface
        pos = 2 + rng.randrange(len(s) - 3)
        return _splice(text, tok.span[0], tok.span[1], s[:pos] + " " + s[pos:])
    return None


def perturb_punctuation(text: str, rng: random.Random, res: Resources) -> RuleResult:
    """Remove one comma (if any, 50/50) or insert one after a non-final word."""
    tokens = tokenize(text)
    commas = [t for t in tokens if t.surface == ","]
    words = _words(tokens)
    non_final = words[:-1]
    remove_branch = rng.random() < 0.5
    if remove_branch and commas:
        tok = commas[rng.randrange(len(commas))]
        data = text.encode("utf-8")
        new = (data[: tok.span[0]] + data[tok.span[1] :]).decode("utf-8")
        return new, (tok.span[0], tok.span[0])
    if non_final:
        tok = non_final[rng.randrange(len(non_final))]
        return _splice(text, tok.span[1], tok.span[1], ",")
    if commas:
        tok = commas[rng.randrange(len(commas))]
        data = text.encode("utf-8")
        new = (data[: tok.span[0]] + data[tok.span[1] :]).decode("utf-8")
        return new, (tok.span[0], tok.span[0])
    return None


def quasipoetry_reshape(prose: str, rng: random.Random) -> str:
    """Reflow prose into poem-shaped lines of 4-10 words, capitalizing each line.

    Produces correct text (a data-shaping source, not a corruption); word
    count and attached punctuation are preserved.
    """
    words = prose.split()
    if len(words) < 4:
        raise DataError("quasipoetry_reshape needs at least 4 words")
    lines: list[str] = []
    i = 0
    while i < len(words):
        n = rng.randint(4, 10)
        chunk = words[i : i + n]
        i += n
        line = " ".join(chunk)
        lines.append(line[0].upper() + line[1:])
    return "\n".join(lines)


RULES: dict[str, Callable[[str, random.Random, Resources], RuleResult]] = {
    "grammar_form": distort_grammar_form,
    "preposition": distort_preposition,
    "misspelling": inject_misspelling,
    "split_merge": split_or_merge_words,
    "punctuation": perturb_punctuation,
}


def _weighted_order(weights: dict[str, float], rng: random.Random) -> list[str]:
    pool = [(name, weights.get(name, 0.0)) for name in RULE_NAMES if weights.get(name, 0.0) > 0]
    order: list[str] = []
    while pool:
        total = sum(w for _, w in pool)
        x = rng.random() * total
        acc = 0.0
        pick = len(pool) - 1
        for idx, (_, w) in enumerate(pool):
            acc += w
            if x < acc:
                pick = idx
                break
        order.append(pool.pop(pick)[0])
    return order


def corrupt(
    text: str,
    config: CorruptionConfig,
    record_id: str = "0",
    domain: str = "synthetic",
) -> CorruptionRecord:
    """Apply 1..max_edits_per_text weighted rules; deterministic per (seed, id, text).

    Rules that cancel each other out are retried with a salted stream before
    giving up, so corrupted text always differs from the original.
    """
    for salt in range(10):
        rng = _derive_rng(config.seed, record_id, text, salt)
        k = rng.randint(1, config.max_edits_per_text)
        current = text
        applied: list[tuple[str, Span]] = []
        for _ in range(k):
            hit = False
            for name in _weighted_order(config.rule_weights, rng):
                result = RULES[name](current, rng, config.resources)
                if result is not None:
                    current, span = result
                    applied.append((name, span))
                    hit = True
                    break
            if not hit:
                break
        if applied and current != text:
            return CorruptionRecord(record_id, text, current, applied, domain)
    raise DataError(f"no applicable rule for record {record_id!r}")


def generate_dataset(
    texts: Sequence[str],
    config: CorruptionConfig,
    n: int,
    domain: str = "synthetic",
    id_prefix: str = "syn",
) -> list[CorruptionRecord]:
    """n records cycling through the corpus; record i is independent of n."""
    if not texts:
        raise DataError("empty corpus")
    return [
        corrupt(texts[i % len(texts)], config, f"{id_prefix}-{i:06d}", domain)
        for i in range(n)
    ]
