"""Readers, writers, and validators for the newline-delimited JSON interchange files.

Schemas:
  pairs.jsonl        {"id","domain","text_fixed","text_corrupted","rules":[...]}
  token_scores.jsonl {"id","tokens","logprob","rank","entropy","topk","tail_mass"}
  embeddings.jsonl   {"id","layer":int|null,"vector":[floats]}
  features.jsonl     {"id","domain","label", 23 numeric feature keys}
  predictions.jsonl  {"id","pred":0|1,"score":float|null}
  edits.jsonl        {"id","edits":[{"kind","src","dst","pos","category"}]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corruptor import CorruptionRecord
from .edits import EditOp
from .errors import DataError
from .metrics import FEATURE_KEYS, TextFeatureVector


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}: line {lineno}: expected a JSON object")
            yield lineno, obj


def write_jsonl(rows: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


# ------------------------------------------------------------- pairs

def write_pairs(records: Sequence[CorruptionRecord], path: str | Path) -> None:
    write_jsonl(
        (
            {
                "id": r.id,
                "domain": r.domain,
                "text_fixed": r.original,
                "text_corrupted": r.corrupted,
                "rules": [name for name, _ in r.applied],
            }
            for r in records
        ),
        path,
    )


# ------------------------------------------------------ token scores

@dataclass(frozen=True)
class TokenScores:
    """Per-token LM statistics for one text: the token_scores.jsonl record."""

    id: str
    tokens: list[str]
    logprob: list[float]
    rank: list[int]
    entropy: list[float]
    topk: list[list[float]]
    tail_mass: list[float]

    def __post_init__(self) -> None:
        n = len(self.tokens)
        for name in ("logprob", "rank", "entropy", "topk", "tail_mass"):
            if len(getattr(self, name)) != n:
                raise DataError(f"token scores {self.id!r}: {name} length != tokens length")
        for r in self.rank:
            if r < 1:
                raise DataError(f"token scores {self.id!r}: rank < 1")
        for probs, tail in zip(self.topk, self.tail_mass):
            total = math.fsum(probs) + tail
            if abs(total - 1.0) > 1e-3:
                raise DataError(
                    f"token scores {self.id!r}: topk + tail_mass sums to {total:.6f}"
                )


def read_token_scores(path: str | Path) -> dict[str, TokenScores]:
    out: dict[str, TokenScores] = {}
    for lineno, obj in iter_jsonl(path):
        try:
            ts = TokenScores(
                id=str(obj["id"]),
                tokens=[str(t) for t in obj["tokens"]],
                logprob=[float(v) for v in obj["logprob"]],
                rank=[int(v) for v in obj["rank"]],
                entropy=[float(v) for v in obj["entropy"]],
                topk=[[float(p) for p in row] for row in obj["topk"]],
                tail_mass=[float(v) for v in obj["tail_mass"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: line {lineno}: bad token-score record: {exc}") from exc
        if ts.id in out:
            raise DataError(f"{path}: line {lineno}: duplicate id {ts.id!r}")
        out[ts.id] = ts
    return out


def write_token_scores(records: Iterable[TokenScores], path: str | Path) -> None:
    write_jsonl(
        (
            {
                "id": r.id,
                "tokens": r.tokens,
                "logprob": r.logprob,
                "rank": r.rank,
                "entropy": r.entropy,
                "topk": r.topk,
                "tail_mass": r.tail_mass,
            }
            for r in records
        ),
        path,
    )


# -------------------------------------------------------- embeddings

def read_embeddings(path: str | Path) -> dict[str, list[float]]:
    """id -> vector; enforces a single dimension across the file."""
    out: dict[str, list[float]] = {}
    dim: int | None = None
    for lineno, obj in iter_jsonl(path):
        try:
            key = str(obj["id"])
            vec = [float(v) for v in obj["vector"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: line {lineno}: bad embedding record: {exc}") from exc
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DataError(
                f"{path}: line {lineno}: vector dimension {len(vec)} != {dim}"
            )
        layer = obj.get("layer")
        if layer is not None:
            key = f"{key}@{int(layer)}"
        if key in out:
            raise DataError(f"{path}: line {lineno}: duplicate id {key!r}")
        out[key] = vec
    if not out:
        raise DataError(f"{path}: no embedding records")
    return out


# ---------------------------------------------------------- features

def write_features(
    rows: Sequence[tuple[str, str, int, TextFeatureVector]], path: str | Path
) -> None:
    def row_dict(rid: str, domain: str, label: int, fv: TextFeatureVector) -> dict:
        row = {"id": rid, "domain": domain, "label": label}
        full = fv.as_dict()
        for key in FEATURE_KEYS:
            row[key] = full[key]
        return row

    write_jsonl((row_dict(*r) for r in rows), path)


def read_features(path: str | Path) -> list[dict]:
    """Feature rows with id/domain/label plus the 23 numeric feature keys."""
    rows: list[dict] = []
    for lineno, obj in iter_jsonl(path):
        missing = [k for k in FEATURE_KEYS if k not in obj]
        if missing:
            raise DataError(f"{path}: line {lineno}: missing feature keys {missing}")
        if "id" not in obj or "label" not in obj:
            raise DataError(f"{path}: line {lineno}: missing id or label")
        row = {"id": str(obj["id"]), "domain": str(obj.get("domain") or ""), "label": int(obj["label"])}
        for k in FEATURE_KEYS:
            row[k] = float(obj[k])
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: no feature rows")
    return rows


# ------------------------------------------------------- predictions

def read_predictions(path: str | Path) -> dict[str, int]:
    preds: dict[str, int] = {}
    for lineno, obj in iter_jsonl(path):
        if "id" not in obj or "pred" not in obj:
            raise DataError(f"{path}: line {lineno}: prediction needs id and pred")
        pid = str(obj["id"])
        pred = obj["pred"]
        if pred not in (0, 1):
            raise DataError(f"{path}: line {lineno}: pred must be 0 or 1")
        if pid in preds:
            raise DataError(f"{path}: line {lineno}: duplicate id {pid!r}")
        preds[pid] = int(pred)
    if not preds:
        raise DataError(f"{path}: no predictions")
    return preds


def write_predictions(
    rows: Iterable[tuple[str, int, float | None]], path: str | Path
) -> None:
    write_jsonl(
        ({"id": rid, "pred": pred, "score": score} for rid, pred, score in rows),
        path,
    )


# ------------------------------------------------------------- edits

def write_edits(rows: Iterable[tuple[str, Sequence[EditOp]]], path: str | Path) -> None:
    write_jsonl(
        (
            {
                "id": rid,
                "edits": [
                    {
                        "kind": e.kind.value,
                        "src": list(e.src_tokens),
                        "dst": list(e.dst_tokens),
                        "pos": e.src_position,
                        "category": e.category.value,
                    }
                    for e in ops
                ],
            }
            for rid, ops in rows
        ),
        path,
    )
