"""gedkit: corpus-quality toolkit for grammatical-error detection workflows.

Generates synthetically corrupted text pairs, computes token-level and
text-level anomaly indicators from language-model scores, runs detectors
(threshold search, outlier models, feature classifier), analyzes word-level
edits between defective and corrected texts, and evaluates any detector with
F0.5 on balanced sets with bootstrap confidence intervals.
"""

__version__ = "0.1.0"

from .corpus import (
    LabeledInstance,
    TextSample,
    Token,
    TokenKind,
    expand_pairs,
    read_samples,
    tokenize,
    write_samples,
)
from .errors import DataError

__all__ = [
    "DataError",
    "LabeledInstance",
    "TextSample",
    "Token",
    "TokenKind",
    "__version__",
    "expand_pairs",
    "read_samples",
    "tokenize",
    "write_samples",
]
