from pathlib import Path

import pytest

RESOURCES = Path(__file__).parent.parent / "src" / "gedkit" / "resources"


class FakeRng:
    """Scripted stand-in for random.Random: pops pre-seeded draws in call order."""

    def __init__(self, randranges=(), randoms=(), randints=()):
        self.randranges = list(randranges)
        self.randoms = list(randoms)
        self.randints = list(randints)

    def randrange(self, n):
        value = self.randranges.pop(0)
        assert 0 <= value < n, f"scripted randrange({n}) got {value}"
        return value

    def random(self):
        return self.randoms.pop(0)

    def randint(self, a, b):
        value = self.randints.pop(0)
        assert a <= value <= b
        return value


@pytest.fixture
def fake_rng_cls():
    return FakeRng


@pytest.fixture
def demo_corpus_path():
    return RESOURCES / "demo_corpus.jsonl"


@pytest.fixture
def demo_texts(demo_corpus_path):
    from gedkit.corpus import read_samples

    return [s.text_fixed for s in read_samples(demo_corpus_path)]
