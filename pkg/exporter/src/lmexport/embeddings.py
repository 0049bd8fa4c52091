"""Pooled contextual embeddings in embeddings.jsonl format.

The text vector is the mean of its token embeddings, excluding begin/end/pad
special tokens (UNK is content and stays). One record per requested layer;
layer null means the final hidden state.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .samples import read_instances, write_jsonl

logger = logging.getLogger(__name__)


def _boundary_special_ids(tokenizer) -> set[int]:
    ids = {
        tokenizer.bos_token_id,
        tokenizer.eos_token_id,
        tokenizer.cls_token_id,
        tokenizer.sep_token_id,
        tokenizer.pad_token_id,
    }
    ids.discard(None)
    return ids


def export_embeddings(
    model_name: str | Path,
    samples_path: str | Path,
    out_path: str | Path,
    layers: Sequence[int | None] = (None,),
    batch_size: int = 8,
    device: str = "cpu",
) -> dict:
    """Mean-pooled embeddings for every instance; returns run statistics."""
    tokenizer = AutoTokenizer.from_pretrained(str(model_name))
    model = AutoModel.from_pretrained(str(model_name)).to(device).eval()
    if tokenizer.pad_token_id is None:
        tokenizer.pad_token = tokenizer.eos_token or tokenizer.bos_token
    special_ids = _boundary_special_ids(tokenizer)

    instances = read_instances(samples_path)
    records: list[dict] = []
    skipped = 0
    for start in range(0, len(instances), batch_size):
        batch = instances[start : start + batch_size]
        enc = tokenizer([inst.text for inst in batch], return_tensors="pt", padding=True)
        input_ids = enc["input_ids"].to(device)
        attention_mask = enc["attention_mask"].to(device)
        with torch.no_grad():
            out = model(
                input_ids=input_ids,
                attention_mask=attention_mask,
                output_hidden_states=True,
            )
        hidden = out.hidden_states  # (n_layer + 1) tensors of [B, T, D]
        for i, inst in enumerate(batch):
            keep = attention_mask[i].bool().clone()
            for pos in range(int(keep.shape[0])):
                if keep[pos] and int(input_ids[i, pos]) in special_ids:
                    keep[pos] = False
            if not bool(keep.any()):
                logger.warning("instance %s has no content tokens, skipped", inst.id)
                skipped += 1
                continue
            for layer in layers:
                if layer is not None and not 0 <= layer < len(hidden):
                    raise ValueError(
                        f"layer {layer} out of range (model has {len(hidden)} states)"
                    )
                states = hidden[-1 if layer is None else layer][i, keep]
                vector = states.mean(dim=0).float().cpu().numpy().astype(np.float32)
                records.append(
                    {
                        "id": inst.id,
                        "layer": layer,
                        "vector": [float(v) for v in vector],
                    }
                )
    write_jsonl(records, out_path)
    stats = {
        "instances": len(instances),
        "records": len(records),
        "skipped": skipped,
        "layers": [("final" if l is None else l) for l in layers],
        "dimension": int(model.config.hidden_size) if hasattr(model.config, "hidden_size") else None,
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump({"tool": "lmexport", "command": "embeddings", "model": str(model_name), **stats}, fh)
        fh.write("\n")
    return stats
