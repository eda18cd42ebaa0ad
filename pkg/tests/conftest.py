import pytest

from tweetsumm.embed import EmbeddingProvider
from tweetsumm.preprocess import PAD_TOKEN, SPECIAL_STREAM_TOKENS, UNK_TOKEN, Vocab


def make_small_vocab():
    words = [
        "the", "cat", "sat", "ran", "check", "plain", "words", "only",
        "see", "and", "un", "##aff", "##able", "storm", "hits", "coast",
    ]
    return Vocab([PAD_TOKEN, UNK_TOKEN] + words + list(SPECIAL_STREAM_TOKENS))


@pytest.fixture(scope="session")
def small_vocab():
    return make_small_vocab()


@pytest.fixture
def provider():
    return EmbeddingProvider(dim=32)
