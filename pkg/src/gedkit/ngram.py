"""Add-k smoothed n-gram language model over word/number/punctuation tokens.

The model exposes full next-token distributions, which the token metrics need
for entropy and oddballness over the whole vocabulary. Token surfaces are
lowercased; out-of-vocabulary tokens map to UNK; contexts are padded with BOS.
Linebreak tokens are never scored.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import TokenKind, tokenize
from .errors import DataError

UNK = "<unk>"
BOS = "<bos>"

_FORMAT = "gedkit.ngram"
_VERSION = 1


@dataclass(frozen=True)
class DistributionView:
    """Next-token distribution with a descending-order permutation.

    `sorted_desc[k]` is the vocabulary index of the (k+1)-th most probable
    token; ties are broken by ascending vocabulary index so ranks are
    deterministic.
    """

    probabilities: np.ndarray
    sorted_desc: np.ndarray

    def __post_init__(self) -> None:
        total = float(np.sum(self.probabilities))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"distribution sums to {total}, not 1")

    @classmethod
    def from_probs(cls, probs: Sequence[float] | np.ndarray) -> "DistributionView":
        p = np.asarray(probs, dtype=np.float64)
        order = np.argsort(-p, kind="stable")
        return cls(p, order)

    @property
    def size(self) -> int:
        return int(self.probabilities.shape[0])


@dataclass(frozen=True)
class ScoredToken:
    surface: str
    distribution: DistributionView
    observed_index: int


@dataclass
class NGramModel:
    order: int
    smoothing_k: float
    vocab_cap: int
    vocabulary: list[str]  # predictable tokens; last entry is UNK
    context_counts: dict[tuple[int, ...], dict[int, int]] = field(default_factory=dict)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def bos_index(self) -> int:
        return len(self.vocabulary)

    def token_index(self, surface: str) -> int:
        idx = self._index.get(surface.lower())
        return idx if idx is not None else self.vocab_size - 1  # UNK

    def __post_init__(self) -> None:
        self._index = {tok: i for i, tok in enumerate(self.vocabulary)}


def _scoreable_tokens(text: str) -> list[str]:
    return [t.surface.lower() for t in tokenize(text) if t.kind is not TokenKind.LINEBREAK]


def fit(
    corpus: Sequence[str],
    order: int = 3,
    smoothing_k: float = 0.1,
    vocab_cap: int = 50000,
) -> NGramModel:
    """Fit counts on a corpus of texts.

    The vocabulary keeps the `vocab_cap` most frequent token surfaces (ties
    broken lexicographically) plus UNK; contexts are padded with BOS.
    """
    if not corpus:
        raise DataError("empty corpus")
    if order < 1:
        raise ValueError("order must be >= 1")
    if smoothing_k <= 0:
        raise ValueError("smoothing_k must be positive")

    counts: Counter[str] = Counter()
    token_lists: list[list[str]] = []
    for text in corpus:
        toks = _scoreable_tokens(text)
        token_lists.append(toks)
        counts.update(toks)

    kept = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:vocab_cap]
    vocabulary = [tok for tok, _ in kept] + [UNK]
    model = NGramModel(order, smoothing_k, vocab_cap, vocabulary)

    bos = model.bos_index
    for toks in token_lists:
        seq = [bos] * (order - 1) + [model.token_index(t) for t in toks]
        for i in range(order - 1, len(seq)):
            ctx = tuple(seq[i - order + 1 : i])
            bucket = model.context_counts.setdefault(ctx, {})
            bucket[seq[i]] = bucket.get(seq[i], 0) + 1
    return model


def _context_key(model: NGramModel, context: Sequence[str]) -> tuple[int, ...]:
    need = model.order - 1
    ids = [model.token_index(t.lower()) for t in context][-need:] if need else []
    return tuple([model.bos_index] * (need - len(ids)) + ids)


def distribution(model: NGramModel, context: Sequence[str]) -> DistributionView:
    """Smoothed next-token distribution for the last order-1 context tokens."""
    v = model.vocab_size
    probs = np.full(v, model.smoothing_k, dtype=np.float64)
    total = model.smoothing_k * v
    bucket = model.context_counts.get(_context_key(model, context))
    if bucket:
        for tok, c in bucket.items():
            probs[tok] += c
        total += sum(bucket.values())
    probs /= total
    return DistributionView.from_probs(probs)


def score_text(model: NGramModel, text: str) -> list[ScoredToken]:
    """Score every word/number/punctuation token left to right."""
    toks = [t for t in tokenize(text) if t.kind is not TokenKind.LINEBREAK]
    if not toks:
        raise DataError("nothing to score")
    surfaces = [t.surface for t in toks]
    lowered = [s.lower() for s in surfaces]
    out: list[ScoredToken] = []
    for i, surface in enumerate(surfaces):
        dist = distribution(model, lowered[:i])
        out.append(ScoredToken(surface, dist, model.token_index(lowered[i])))
    return out


def save(model: NGramModel, path: str | Path) -> None:
    """Persist to a self-describing JSON file (bit-exact round trip)."""
    contexts = sorted(
        (list(ctx), sorted((tok, c) for tok, c in bucket.items()))
        for ctx, bucket in model.context_counts.items()
    )
    obj = {
        "format": _FORMAT,
        "version": _VERSION,
        "order": model.order,
        "smoothing_k": model.smoothing_k,
        "vocab_cap": model.vocab_cap,
        "vocabulary": model.vocabulary,
        "contexts": contexts,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, separators=(",", ":"))
        fh.write("\n")


def load(path: str | Path) -> NGramModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != _FORMAT:
        raise DataError(f"{path}: not a {_FORMAT} file")
    model = NGramModel(
        order=int(obj["order"]),
        smoothing_k=float(obj["smoothing_k"]),
        vocab_cap=int(obj["vocab_cap"]),
        vocabulary=list(obj["vocabulary"]),
    )
    for ctx, pairs in obj["contexts"]:
        model.context_counts[tuple(ctx)] = {int(t): int(c) for t, c in pairs}
    return model
