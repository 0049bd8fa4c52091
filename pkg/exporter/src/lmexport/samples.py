"""samples.jsonl reading and the paired-instance id convention.

A sample is {"id", "domain", "text_corrupted", "text_fixed"}; each present
side becomes one instance whose id carries the side suffix used across the
interchange files ("::corrupted" / "::fixed").
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

SUFFIX_CORRUPTED = "::corrupted"
SUFFIX_FIXED = "::fixed"


@dataclass(frozen=True)
class Instance:
    id: str
    text: str


def read_instances(path: str | Path) -> list[Instance]:
    instances: list[Instance] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            sid = str(obj.get("id"))
            if sid in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate id {sid!r}")
            seen.add(sid)
            corrupted = obj.get("text_corrupted")
            fixed = obj.get("text_fixed")
            if corrupted is None and fixed is None:
                raise ValueError(f"{path}: line {lineno}: sample has no text")
            if corrupted is not None:
                instances.append(Instance(sid + SUFFIX_CORRUPTED, corrupted))
            if fixed is not None:
                instances.append(Instance(sid + SUFFIX_FIXED, fixed))
    return instances


def write_jsonl(rows, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
