"""Word-level edit extraction between defective and corrected texts.

Texts are aligned at the token level by longest common subsequence; each
maximal run of non-matching tokens becomes one edit (insert / delete /
replace). Edits are categorized into punctuation / tokenization / spelling /
other, and corpus-level statistics (edit histograms, signature frequencies,
KL divergence, vocabulary and n-gram counts) are built on top.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .corpus import TextSample, TokenKind, tokenize
from .errors import DataError


class EditKind(str, Enum):
    INSERT = "insert"
    DELETE = "delete"
    REPLACE = "replace"


class EditCategory(str, Enum):
    SPELLING = "spelling"
    TOKENIZATION = "tokenization"
    PUNCTUATION = "punctuation"
    OTHER = "other"


@dataclass(frozen=True)
class EditOp:
    kind: EditKind
    src_tokens: tuple[str, ...]
    dst_tokens: tuple[str, ...]
    src_position: int  # token index into the source token sequence
    category: EditCategory

    def signature(self) -> tuple[str, str, str, str]:
        return (
            self.kind.value,
            self.category.value,
            " ".join(t.lower() for t in self.src_tokens),
            " ".join(t.lower() for t in self.dst_tokens),
        )


@dataclass(frozen=True)
class EditProfile:
    category_counts: dict[str, int]
    edits_per_pair_histogram: dict[int, int]
    signature_frequencies: dict[tuple[str, str, str, str], float]


def _lcs_blocks(a: list[str], b: list[str]) -> list[tuple[int, int, list[str], list[str]]]:
    """Non-matching blocks (src index, dst index, removed, added) of an LCS alignment."""
    n, m = len(a), len(b)
    # lengths[i][j] = LCS length of the suffixes a[i:], b[j:]
    lengths = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        ai = a[i]
        row = lengths[i]
        nxt = lengths[i + 1]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = nxt[j] if nxt[j] >= row[j + 1] else row[j + 1]

    blocks: list[tuple[int, int, list[str], list[str]]] = []
    i = j = 0
    start_i = start_j = 0
    removed: list[str] = []
    added: list[str] = []

    def flush() -> None:
        if removed or added:
            blocks.append((start_i, start_j, list(removed), list(added)))
            removed.clear()
            added.clear()

    while i < n or j < m:
        if i < n and j < m and a[i] == b[j]:
            flush()
            i += 1
            j += 1
            start_i, start_j = i, j
        else:
            if not removed and not added:
                start_i, start_j = i, j
            # On ties prefer deletion so replace blocks list sources first.
            if i < n and (j == m or lengths[i + 1][j] >= lengths[i][j + 1]):
                removed.append(a[i])
                i += 1
            else:
                added.append(b[j])
                j += 1
    flush()
    return blocks


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def categorize(
    kind: EditKind,
    src_tokens: Sequence[str],
    dst_tokens: Sequence[str],
    lexicon: set[str] | None = None,
) -> EditCategory:
    """First matching rule wins: punctuation, tokenization, spelling, other.

    The optional lexicon marks known-correct source words: a replacement whose
    source word is in it is a grammar fix, not a misspelling.
    """
    def is_punct(s: str) -> bool:
        toks = tokenize(s)
        return len(toks) == 1 and toks[0].kind is TokenKind.PUNCTUATION

    if all(is_punct(t) for t in src_tokens) and all(is_punct(t) for t in dst_tokens):
        return EditCategory.PUNCTUATION
    if kind is EditKind.REPLACE:
        src_cat = "".join(src_tokens).lower()
        dst_cat = "".join(dst_tokens).lower()
        if src_cat == dst_cat:
            return EditCategory.TOKENIZATION
        if (
            len(src_tokens) == 1
            and len(dst_tokens) == 1
            and src_tokens[0].isalpha()
            and dst_tokens[0].isalpha()
            and levenshtein(src_tokens[0].lower(), dst_tokens[0].lower()) <= 2
            and (lexicon is None or src_tokens[0].lower() not in lexicon)
        ):
            return EditCategory.SPELLING
    return EditCategory.OTHER


def word_level_diff(
    a: str, b: str, lexicon: set[str] | None = None
) -> list[EditOp]:
    """Word-level edits turning text a into text b (empty when identical)."""
    ta = [t.surface for t in tokenize(a)]
    tb = [t.surface for t in tokenize(b)]
    ops: list[EditOp] = []
    for i, _j, removed, added in _lcs_blocks(ta, tb):
        if removed and added:
            kind = EditKind.REPLACE
        elif removed:
            kind = EditKind.DELETE
        else:
            kind = EditKind.INSERT
        ops.append(
            EditOp(
                kind=kind,
                src_tokens=tuple(removed),
                dst_tokens=tuple(added),
                src_position=i,
                category=categorize(kind, removed, added, lexicon),
            )
        )
    return ops


def render_tokens(surfaces: Iterable[str]) -> str:
    """Canonical whitespace rendering of a token surface sequence.

    Single space between word/number tokens, no space before punctuation,
    linebreak tokens verbatim with no surrounding spaces.
    """
    out: list[str] = []
    for s in surfaces:
        toks = tokenize(s)
        if len(toks) != 1:
            raise ValueError(f"not a single token surface: {s!r}")
        kind = toks[0].kind
        if kind is TokenKind.LINEBREAK or kind is TokenKind.PUNCTUATION:
            out.append(s)
        else:
            if out and not out[-1].endswith("\n"):
                out.append(" " + s)
            else:
                out.append(s)
    return "".join(out)


def normalize_ws(text: str) -> str:
    """Text re-rendered in the canonical whitespace form."""
    return render_tokens(t.surface for t in tokenize(text))


def apply_edits(a: str, edits: Sequence[EditOp]) -> str:
    """Apply edits produced by word_level_diff(a, b); returns b normalized."""
    tokens = [t.surface for t in tokenize(a)]
    out: list[str] = []
    cursor = 0
    for e in sorted(edits, key=lambda e: e.src_position):
        if e.src_position < cursor or e.src_position > len(tokens):
            raise DataError(f"edit position {e.src_position} out of range")
        out.extend(tokens[cursor : e.src_position])
        cursor = e.src_position
        if e.kind in (EditKind.DELETE, EditKind.REPLACE):
            seg = tokens[cursor : cursor + len(e.src_tokens)]
            if tuple(seg) != e.src_tokens:
                raise DataError(
                    f"edit at token {e.src_position} does not match text: "
                    f"expected {e.src_tokens}, found {tuple(seg)}"
                )
            cursor += len(e.src_tokens)
        if e.kind in (EditKind.INSERT, EditKind.REPLACE):
            out.extend(e.dst_tokens)
    out.extend(tokens[cursor:])
    return render_tokens(out)


_HYPHEN_WS = re.compile(r"[ \t]*-[ \t]*")


def count_edits(pair: TextSample, lexicon: set[str] | None = None) -> int:
    """Edit count for one pair; whitespace shuffling around hyphens counts 0."""
    if pair.text_corrupted is None or pair.text_fixed is None:
        raise DataError(f"pair {pair.id!r} is missing a side")
    a, b = pair.text_corrupted, pair.text_fixed
    if a == b:
        return 0
    if _HYPHEN_WS.sub("-", a) == _HYPHEN_WS.sub("-", b):
        return 0
    return len(word_level_diff(a, b, lexicon))


def edit_count_histogram(
    pairs: Sequence[TextSample], lexicon: set[str] | None = None
) -> dict[int, int]:
    """Histogram of word-level edit counts per (corrupted, fixed) pair."""
    hist: Counter[int] = Counter()
    for pair in pairs:
        hist[count_edits(pair, lexicon)] += 1
    return dict(sorted(hist.items()))


def edit_frequency_profile(
    pairs: Sequence[TextSample], lexicon: set[str] | None = None
) -> EditProfile:
    """Normalized edit-signature frequencies plus category and count stats."""
    categories: Counter[str] = Counter()
    per_pair: Counter[int] = Counter()
    signatures: Counter[tuple[str, str, str, str]] = Counter()
    total = 0
    for pair in pairs:
        if pair.text_corrupted is None or pair.text_fixed is None:
            raise DataError(f"pair {pair.id!r} is missing a side")
        ops = word_level_diff(pair.text_corrupted, pair.text_fixed, lexicon)
        per_pair[len(ops)] += 1
        for op in ops:
            categories[op.category.value] += 1
            signatures[op.signature()] += 1
            total += 1
    if total == 0:
        raise DataError("no edits found in any pair")
    freqs = {sig: c / total for sig, c in signatures.items()}
    return EditProfile(
        category_counts=dict(categories),
        edits_per_pair_histogram=dict(sorted(per_pair.items())),
        signature_frequencies=freqs,
    )


def kl_divergence(p: EditProfile, q: EditProfile, epsilon: float = 1e-9) -> float:
    """D(P || Q) = sum p_i log(p_i / q_i) over the union of edit signatures.

    Both sides get an additive epsilon and are renormalized; epsilon = 0
    reproduces the strict definition and fails when some P-signature has zero
    Q-frequency.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if not p.signature_frequencies:
        raise ValueError("P profile is empty")
    support = sorted(set(p.signature_frequencies) | set(q.signature_frequencies))
    pv = [p.signature_frequencies.get(s, 0.0) + epsilon for s in support]
    qv = [q.signature_frequencies.get(s, 0.0) + epsilon for s in support]
    if epsilon == 0.0 and any(a > 0.0 and b == 0.0 for a, b in zip(pv, qv)):
        raise ValueError("epsilon = 0 with P-support outside Q-support")
    ps = math.fsum(pv)
    qs = math.fsum(qv)
    return math.fsum(
        (a / ps) * math.log((a / ps) / (b / qs)) for a, b in zip(pv, qv) if a > 0.0
    )


@dataclass(frozen=True)
class VocabStats:
    total_words: int
    unique_words: int
    unique_ngrams: dict[int, int]  # n -> count, for n in 2..max_n


def vocab_stats(corpus: Iterable[str], max_n: int = 3) -> VocabStats:
    """Word and n-gram counts over word tokens only, n-grams not crossing linebreaks."""
    total = 0
    words: set[str] = set()
    ngrams: dict[int, set[tuple[str, ...]]] = {n: set() for n in range(2, max_n + 1)}
    for text in corpus:
        run: list[str] = []
        runs: list[list[str]] = [run]
        for tok in tokenize(text):
            if tok.kind is TokenKind.WORD:
                run.append(tok.surface.lower())
            elif tok.kind is TokenKind.LINEBREAK:
                run = []
                runs.append(run)
        for r in runs:
            total += len(r)
            words.update(r)
            for n in range(2, max_n + 1):
                for i in range(len(r) - n + 1):
                    ngrams[n].add(tuple(r[i : i + n]))
    return VocabStats(total, len(words), {n: len(s) for n, s in ngrams.items()})


def _vocab(corpus: Iterable[str]) -> set[str]:
    vocab: set[str] = set()
    for text in corpus:
        vocab.update(
            t.surface.lower() for t in tokenize(text) if t.kind is TokenKind.WORD
        )
    return vocab


def vocab_overlap_and_novelty(
    corpus_a: Iterable[str], corpus_b: Iterable[str]
) -> tuple[int, float, float]:
    """(new words of A over B, jaccard overlap, containment |A∩B| / |B|)."""
    va = _vocab(corpus_a)
    vb = _vocab(corpus_b)
    inter = len(va & vb)
    union = len(va | vb)
    jaccard = inter / union if union else 1.0
    containment = inter / len(vb) if vb else 0.0
    return len(va - vb), jaccard, containment


def poem_line_stats(poems: Iterable[str]) -> dict[int, int]:
    """Histogram of non-empty line counts per poem (stanza gaps not counted)."""
    hist: Counter[int] = Counter()
    for poem in poems:
        hist[sum(1 for line in poem.split("\n") if line.strip())] += 1
    return dict(sorted(hist.items()))
