import json

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers, processors
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

WORDS = [
    "кот", "дом", "спит", "ночь", "день", "ветер", "вода", "река", "лес",
    "снег", "окно", "сад", "свет", "на", "в", "у", "и", "а", "тихо", "тепло",
    "стоит", "шумит", "поёт", "идёт", "старый", "белый", "тихий", ",", ".", "!",
]


def build_tiny_model(target_dir):
    """A deterministic word-level causal LM small enough for CPU tests."""
    vocab = {"<unk>": 0, "<bos>": 1, "<pad>": 2}
    for word in WORDS:
        vocab[word] = len(vocab)
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    tok.post_processor = processors.TemplateProcessing(
        single="<bos> $A", special_tokens=[("<bos>", 1)]
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="<unk>",
        bos_token="<bos>",
        pad_token="<pad>",
    )
    torch.manual_seed(0)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=1,
        eos_token_id=1,
    )
    model = GPT2LMHeadModel(config)
    model.eval()
    tokenizer.save_pretrained(target_dir)
    model.save_pretrained(target_dir)
    return len(vocab)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("tiny-model")
    vocab_size = build_tiny_model(str(path))
    return path, vocab_size


@pytest.fixture(scope="session")
def samples_path(tmp_path_factory):
    """The 20-sample conformance fixture: 8 pairs, 6 corrupted-only, 6 correct-only."""
    path = tmp_path_factory.mktemp("fixture") / "samples.jsonl"
    rows = []
    for i in range(8):
        rows.append(
            {
                "id": f"pair-{i}",
                "domain": "poetry" if i % 2 == 0 else "prose",
                "text_corrupted": "кот спит окно и ветер шумит",
                "text_fixed": "кот спит на окно, и ветер тихо шумит",
            }
        )
    for i in range(6):
        rows.append(
            {
                "id": f"bad-{i}",
                "domain": "poetry",
                "text_corrupted": "ночь идёт лес у вода неведомое",
                "text_fixed": None,
            }
        )
    for i in range(6):
        rows.append(
            {
                "id": f"good-{i}",
                "domain": "prose",
                "text_corrupted": None,
                "text_fixed": "старый дом стоит у река, и сад тихо спит",
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path
