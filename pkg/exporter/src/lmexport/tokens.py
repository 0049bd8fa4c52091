"""Per-token logit statistics from a causal LM, in token_scores.jsonl format.

Each scored position records the observed token's log probability, its rank in
the full-vocabulary distribution (ties broken by ascending vocabulary index),
the distribution entropy in nats, the top-k probabilities in descending order,
and the remaining tail mass. All emitted numbers are pinned to 32-bit floats
regardless of compute precision.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModelForCausalLM, AutoTokenizer

from .samples import read_instances, write_jsonl

logger = logging.getLogger(__name__)


def _f32(value: float) -> float:
    return float(np.float32(value))


def _model_max_length(model) -> int | None:
    for attr in ("max_position_embeddings", "n_positions"):
        value = getattr(model.config, attr, None)
        if isinstance(value, int) and value > 0:
            return value
    return None


def export_token_scores(
    model_name: str | Path,
    samples_path: str | Path,
    out_path: str | Path,
    topk: int = 64,
    batch_size: int = 8,
    device: str = "cpu",
) -> dict:
    """Score every instance in a samples file; returns run statistics."""
    tokenizer = AutoTokenizer.from_pretrained(str(model_name))
    model = AutoModelForCausalLM.from_pretrained(str(model_name)).to(device).eval()
    if tokenizer.pad_token_id is None:
        tokenizer.pad_token = tokenizer.eos_token or tokenizer.bos_token
    max_len = _model_max_length(model)

    instances = read_instances(samples_path)
    records: list[dict] = []
    truncated = 0
    skipped = 0
    for start in range(0, len(instances), batch_size):
        batch = instances[start : start + batch_size]
        enc = tokenizer([inst.text for inst in batch], return_tensors="pt", padding=True)
        input_ids = enc["input_ids"]
        attention_mask = enc["attention_mask"]
        if max_len is not None and input_ids.shape[1] > max_len:
            truncated += sum(
                1 for row in attention_mask if int(row.sum()) > max_len
            )
            input_ids = input_ids[:, :max_len]
            attention_mask = attention_mask[:, :max_len]
        input_ids = input_ids.to(device)
        attention_mask = attention_mask.to(device)
        with torch.no_grad():
            logits = model(input_ids=input_ids, attention_mask=attention_mask).logits
        log_probs = torch.log_softmax(logits.double(), dim=-1)

        for i, inst in enumerate(batch):
            length = int(attention_mask[i].sum())
            if length < 2:
                logger.warning("instance %s has no scoreable positions, skipped", inst.id)
                skipped += 1
                continue
            ids_i = input_ids[i, :length]
            tokens, lps, ranks, entropies, topks, tails = [], [], [], [], [], []
            k = min(topk, log_probs.shape[-1])
            for pos in range(length - 1):
                row = log_probs[i, pos]
                observed = int(ids_i[pos + 1])
                lp_obs = row[observed]
                probs = torch.exp(row)
                rank = (
                    1
                    + int((row > lp_obs).sum())
                    + int((row[:observed] == lp_obs).sum())
                )
                entropy = float(-(probs * row).sum())
                top = torch.topk(probs, k).values
                top_list = [_f32(v) for v in top.tolist()]
                tokens.append(tokenizer.convert_ids_to_tokens(observed))
                lps.append(_f32(float(lp_obs)))
                ranks.append(rank)
                entropies.append(_f32(entropy))
                topks.append(top_list)
                tails.append(_f32(max(0.0, 1.0 - float(top.sum()))))
            records.append(
                {
                    "id": inst.id,
                    "tokens": tokens,
                    "logprob": lps,
                    "rank": ranks,
                    "entropy": entropies,
                    "topk": topks,
                    "tail_mass": tails,
                }
            )
    write_jsonl(records, out_path)
    stats = {
        "instances": len(instances),
        "records": len(records),
        "truncated": truncated,
        "skipped": skipped,
        "topk": topk,
        "vocab_size": int(model.config.vocab_size),
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump({"tool": "lmexport", "command": "tokens", "model": str(model_name), **stats}, fh)
        fh.write("\n")
    return stats
