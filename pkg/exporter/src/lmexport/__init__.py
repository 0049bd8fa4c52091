"""lmexport: dump per-token LM statistics and pooled embeddings to JSONL.

Writes the token_scores.jsonl and embeddings.jsonl interchange files consumed
by the gedkit pipeline (`gedkit features --scores ...`, `gedkit fit-outlier
--embeddings ...`).
"""

__version__ = "0.1.0"
